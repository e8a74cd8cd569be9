/** Typed client for the stylerec service; fetch is injectable for tests. */

import type {
  GenerateRequestBody,
  ProductRef,
  RankRequestBody,
  RankedItem,
  ScoredOutfitDto,
  SlotName,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let code = "unknown";
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as {
      error?: { code?: string; message?: string };
    };
    if (body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    path: string,
    init?: RequestInit,
    signal?: AbortSignal,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      signal,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  health(signal?: AbortSignal): Promise<{ status: string }> {
    return this.request("/health", undefined, signal);
  }

  slots(signal?: AbortSignal): Promise<SlotName[]> {
    return this.request("/slots", undefined, signal);
  }

  products(
    params: { slot?: SlotName; window?: number } = {},
    signal?: AbortSignal,
  ): Promise<ProductRef[]> {
    const query = new URLSearchParams();
    if (params.slot !== undefined) query.set("slot", params.slot);
    if (params.window !== undefined) query.set("window", String(params.window));
    const suffix = query.size > 0 ? `?${query.toString()}` : "";
    return this.request(`/products${suffix}`, undefined, signal);
  }

  scorePair(a: string, b: string, signal?: AbortSignal): Promise<{ score: number }> {
    return this.request(
      "/score/pair",
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ a, b }),
      },
      signal,
    );
  }

  rank(body: RankRequestBody, signal?: AbortSignal): Promise<RankedItem[]> {
    return this.request(
      "/rank",
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      },
      signal,
    );
  }

  generate(
    body: GenerateRequestBody,
    signal?: AbortSignal,
  ): Promise<ScoredOutfitDto[]> {
    return this.request(
      "/outfits/generate",
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      },
      signal,
    );
  }
}
