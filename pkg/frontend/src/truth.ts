/**
 * Optional truth-sidecar loader (debugging aid only): maps product ids to
 * planted cluster labels so synthetic products can be tinted by cluster.
 */

export type ClusterMap = Map<string, number>;

export function parseTruthSidecar(text: string): ClusterMap {
  const clusters: ClusterMap = new Map();
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const record = JSON.parse(trimmed) as { id?: string; cluster?: number };
    if (typeof record.id === "string" && typeof record.cluster === "number") {
      clusters.set(record.id, record.cluster);
    }
  }
  return clusters;
}

const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
  "#76b7b2", "#edc948", "#9c755f",
];

export function clusterColor(cluster: number | undefined): string {
  if (cluster === undefined) return "#d8d8d8";
  return PALETTE[((cluster % PALETTE.length) + PALETTE.length) % PALETTE.length];
}
