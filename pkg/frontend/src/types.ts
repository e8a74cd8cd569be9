/** Wire types of the stylerec HTTP API plus workbench-local state shapes. */

export type SlotName =
  | "shirt"
  | "over_shirt"
  | "suit"
  | "jacket"
  | "belt"
  | "trouser"
  | "shoes"
  | "other";

export type ModelName = "pair" | "mean" | "attention";

export interface ProductRef {
  id: string;
  slot: SlotName;
}

export interface RankedItem {
  product_id: string;
  slot: SlotName;
  score: number;
}

export interface RankRequestBody {
  reference: string | string[];
  target_slot: SlotName;
  model?: ModelName;
  top_k?: number;
  window_index?: number;
}

export interface GenerateRequestBody {
  beam_width: number;
  slot_order?: SlotName[];
  window_index?: number;
  seed?: number;
}

export interface ScoredOutfitDto {
  products: ProductRef[];
  score: number;
  step_scores: number[];
}

export type PanelStatus = "idle" | "loading" | "ready" | "error" | "stale";

/**
 * One recommendation panel per open slot.  `items` holds ranked candidates
 * when a reference exists; `stock` holds the unranked stock view shown while
 * the outfit is empty.
 */
export interface PanelState {
  slot: SlotName;
  status: PanelStatus;
  items: RankedItem[];
  stock: ProductRef[];
  message?: string;
}
