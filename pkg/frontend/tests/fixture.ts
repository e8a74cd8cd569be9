/**
 * Deterministic in-memory stand-in for the stylerec service.
 *
 * Responses depend only on the request, so replaying a request sequence
 * reproduces identical bodies.  Every request is logged; deferred mode holds
 * responses until release() so cancellation can be observed.
 */

import type {
  GenerateRequestBody,
  ProductRef,
  RankRequestBody,
  RankedItem,
  SlotName,
} from "../src/types.js";

export const SLOTS: SlotName[] = [
  "shirt", "over_shirt", "suit", "jacket", "belt", "trouser", "shoes", "other",
];

const GENERATE_ORDER: SlotName[] = [
  "jacket", "suit", "shirt", "trouser", "shoes", "belt",
];

export interface RequestRecord {
  method: string;
  path: string;
  body?: unknown;
  aborted: boolean;
}

export interface FixtureService {
  fetchImpl: (input: string, init?: RequestInit) => Promise<Response>;
  log: RequestRecord[];
  /** Hold future responses until release() (for cancellation tests). */
  setDeferred: (deferred: boolean) => void;
  /** Resolve held responses, looping until no new ones appear. */
  release: () => Promise<void>;
  /** Make POST /rank fail for the given slot with a 422 envelope. */
  failRankForSlot: (slot: SlotName | undefined) => void;
}

function productsOf(slot: SlotName): ProductRef[] {
  return [0, 1, 2].map((i) => ({ id: `${slot}-${i}`, slot }));
}

/** Stable string hash onto [0, 1); the fixture's "model". */
function scoreOf(reference: string[], candidate: string, model: string): number {
  const key = `${model}|${reference.join("+")}|${candidate}`;
  let hash = 2166136261;
  for (let i = 0; i < key.length; i += 1) {
    hash ^= key.charCodeAt(i);
    hash = Math.imul(hash, 16777619);
  }
  return ((hash >>> 0) % 10_000) / 10_000;
}

function rankResponse(body: RankRequestBody): RankedItem[] {
  const reference = Array.isArray(body.reference)
    ? body.reference
    : [body.reference];
  const model = body.model ?? "mean";
  const items = productsOf(body.target_slot)
    .filter((p) => !reference.includes(p.id))
    .map((p) => ({
      product_id: p.id,
      slot: p.slot,
      score: scoreOf(reference, p.id, model),
    }));
  items.sort(
    (a, b) => b.score - a.score || a.product_id.localeCompare(b.product_id),
  );
  return items.slice(0, body.top_k ?? 10);
}

function generateResponse(body: GenerateRequestBody) {
  const order = body.slot_order ?? GENERATE_ORDER;
  const picks = order.map((slot) => ({
    id: `${slot}-${(body.seed ?? 0) % 3}`,
    slot,
  }));
  return [
    {
      products: picks,
      score: 0.5,
      step_scores: order.slice(1).map(() => 0.5),
    },
  ];
}

export function createFixtureService(
  options: { deferred?: boolean } = {},
): FixtureService {
  const log: RequestRecord[] = [];
  const held: Array<() => void> = [];
  let deferred = options.deferred ?? false;
  let failSlot: SlotName | undefined;

  function respond(status: number, payload: unknown): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  function buildResponse(method: string, path: string, body: unknown): Response {
    if (method === "GET" && path === "/health") {
      return respond(200, { status: "ok" });
    }
    if (method === "GET" && path === "/slots") {
      return respond(200, SLOTS);
    }
    if (method === "GET" && path.startsWith("/products")) {
      const params = new URLSearchParams(path.split("?")[1] ?? "");
      const slot = params.get("slot") as SlotName | null;
      const all = slot ? productsOf(slot) : SLOTS.flatMap(productsOf);
      return respond(200, all);
    }
    if (method === "POST" && path === "/rank") {
      const request = body as RankRequestBody;
      if (failSlot !== undefined && request.target_slot === failSlot) {
        return respond(422, {
          error: { code: "slot_collision", message: "fixture failure" },
        });
      }
      return respond(200, rankResponse(request));
    }
    if (method === "POST" && path === "/outfits/generate") {
      return respond(200, generateResponse(body as GenerateRequestBody));
    }
    return respond(404, { error: { code: "not_found", message: path } });
  }

  const fetchImpl = (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://fixture");
    const path = url.pathname + url.search;
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    const record: RequestRecord = { method, path, body, aborted: false };
    log.push(record);

    const signal = init?.signal ?? null;
    return new Promise<Response>((resolve, reject) => {
      const abort = () => {
        record.aborted = true;
        reject(new DOMException("request aborted", "AbortError"));
      };
      if (signal?.aborted) {
        abort();
        return;
      }
      signal?.addEventListener("abort", abort, { once: true });
      const complete = () => {
        signal?.removeEventListener("abort", abort);
        if (signal?.aborted) {
          record.aborted = true;
          reject(new DOMException("request aborted", "AbortError"));
        } else {
          resolve(buildResponse(method, url.pathname + url.search, body));
        }
      };
      if (deferred) {
        held.push(complete);
      } else {
        queueMicrotask(complete);
      }
    });
  };

  return {
    fetchImpl,
    log,
    setDeferred: (value) => {
      deferred = value;
    },
    release: async () => {
      // flush until the request flow quiesces (responses can spawn requests)
      for (let round = 0; round < 100; round += 1) {
        while (held.length > 0) {
          held.shift()!();
        }
        await new Promise((resolve) => setTimeout(resolve, 0));
        if (held.length === 0) {
          return;
        }
      }
      throw new Error("fixture did not quiesce");
    },
    failRankForSlot: (slot) => {
      failSlot = slot;
    },
  };
}
