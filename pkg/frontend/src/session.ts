/**
 * Workbench session: the single owner of outfit-building state.
 *
 * The partial outfit never holds two products of one slot, and recommendation
 * panels exist only for slots not yet filled.  Every pick, removal, or
 * setting change starts one ranking request per open slot; a newer refresh
 * aborts the in-flight request of the same slot and obsoletes late responses
 * via a refresh serial, so at most one request per panel is live and panel
 * contents are a pure function of the pick sequence and service responses.
 * Mutations happen synchronously before any await, so the event loop
 * serializes pick events through this single state owner.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  ModelName,
  PanelState,
  ProductRef,
  RankedItem,
  ScoredOutfitDto,
  SlotName,
} from "./types.js";

export interface SessionOptions {
  topK?: number;
  model?: ModelName;
  windowIndex?: number;
  onChange?: () => void;
}

export class WorkbenchSession {
  readonly picks: ProductRef[] = [];
  readonly panels = new Map<SlotName, PanelState>();
  model: ModelName;
  windowIndex: number | undefined;
  topK: number;

  private slotOrder: SlotName[] = [];
  private controllers = new Map<SlotName, AbortController>();
  private refreshSerial = 0;
  private readonly onChange: () => void;

  constructor(
    private readonly client: ApiClient,
    options: SessionOptions = {},
  ) {
    this.topK = options.topK ?? 10;
    this.model = options.model ?? "mean";
    this.windowIndex = options.windowIndex;
    this.onChange = options.onChange ?? (() => {});
  }

  /** Slots known to the service, in canonical order. */
  get slots(): readonly SlotName[] {
    return this.slotOrder;
  }

  /** Slots not yet filled by a pick; exactly these have panels. */
  openSlots(): SlotName[] {
    const filled = new Set(this.picks.map((p) => p.slot));
    return this.slotOrder.filter((slot) => !filled.has(slot));
  }

  pickedSlot(slot: SlotName): ProductRef | undefined {
    return this.picks.find((p) => p.slot === slot);
  }

  /** Fetch the slot list and populate the initial (unranked) panels. */
  async init(): Promise<void> {
    this.slotOrder = await this.client.slots();
    await this.refreshPanels();
  }

  /** Add a product to the outfit; rejects a second product of a filled slot. */
  pick(product: ProductRef): Promise<void> {
    if (this.picks.some((p) => p.slot === product.slot)) {
      return Promise.reject(
        new Error(`slot ${product.slot} already holds a product`),
      );
    }
    this.picks.push(product);
    return this.refreshPanels();
  }

  /** Remove the pick of a slot (no-op when the slot is empty). */
  remove(slot: SlotName): Promise<void> {
    const index = this.picks.findIndex((p) => p.slot === slot);
    if (index < 0) {
      return Promise.resolve();
    }
    this.picks.splice(index, 1);
    return this.refreshPanels();
  }

  setModel(model: ModelName): Promise<void> {
    this.model = model;
    return this.refreshPanels();
  }

  setWindow(windowIndex: number | undefined): Promise<void> {
    this.windowIndex = windowIndex;
    return this.refreshPanels();
  }

  /** Compose an outfit on the service and load the best one as the picks. */
  async generateOutfit(
    beamWidth: number,
    seed = 0,
  ): Promise<ScoredOutfitDto | undefined> {
    const outfits = await this.client.generate({
      beam_width: beamWidth,
      seed,
      window_index: this.windowIndex,
    });
    const top = outfits[0];
    if (top !== undefined) {
      this.picks.splice(0, this.picks.length, ...top.products);
      await this.refreshPanels();
    }
    return top;
  }

  /**
   * Issue one request per open slot.  Existing panel contents are marked
   * stale until the fresh response lands; a panel whose slot got filled is
   * dropped; responses belonging to a superseded refresh are discarded.
   */
  private refreshPanels(): Promise<void> {
    const serial = ++this.refreshSerial;
    const open = this.openSlots();
    const openSet = new Set(open);

    for (const slot of [...this.panels.keys()]) {
      if (!openSet.has(slot)) {
        this.controllers.get(slot)?.abort();
        this.controllers.delete(slot);
        this.panels.delete(slot);
      }
    }
    for (const slot of open) {
      const previous = this.panels.get(slot);
      this.panels.set(slot, {
        slot,
        status: previous && previous.status === "ready" ? "stale" : "loading",
        items: previous?.items ?? [],
        stock: previous?.stock ?? [],
      });
    }
    this.onChange();

    return Promise.all(
      open.map((slot) => this.refreshOneSlot(slot, serial)),
    ).then(() => undefined);
  }

  private async refreshOneSlot(slot: SlotName, serial: number): Promise<void> {
    this.controllers.get(slot)?.abort();
    const controller = new AbortController();
    this.controllers.set(slot, controller);
    const reference = this.picks.map((p) => p.id);

    let panel: PanelState;
    try {
      if (reference.length === 0) {
        const stock = await this.client.products(
          { slot, window: this.windowIndex },
          controller.signal,
        );
        panel = { slot, status: "ready", items: [], stock };
      } else {
        const items: RankedItem[] = await this.client.rank(
          {
            reference,
            target_slot: slot,
            model: this.model,
            top_k: this.topK,
            window_index: this.windowIndex,
          },
          controller.signal,
        );
        panel = { slot, status: "ready", items, stock: [] };
      }
    } catch (error) {
      if (controller.signal.aborted || this.refreshSerial !== serial) {
        return; // superseded by a newer refresh
      }
      const message =
        error instanceof ApiError
          ? `${error.code}: ${error.message}`
          : String(error);
      panel = { slot, status: "error", items: [], stock: [], message };
    }
    if (this.refreshSerial !== serial || !this.panels.has(slot)) {
      return; // the outfit changed while this response was in flight
    }
    this.panels.set(slot, panel);
    this.onChange();
  }
}
