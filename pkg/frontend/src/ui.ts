/** DOM rendering: a pure projection of the session state onto the page. */

import type { WorkbenchSession } from "./session.js";
import type { PanelState, ProductRef } from "./types.js";
import { ClusterMap, clusterColor } from "./truth.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function productTile(
  product: ProductRef,
  clusters: ClusterMap,
  score: number | undefined,
  onClick: (() => void) | undefined,
): HTMLElement {
  const tile = el("button", "tile");
  tile.style.borderLeftColor = clusterColor(clusters.get(product.id));
  tile.appendChild(el("span", "tile-id", product.id));
  tile.appendChild(el("span", "tile-slot", product.slot));
  if (score !== undefined) {
    tile.appendChild(el("span", "tile-score", score.toFixed(4)));
  }
  if (onClick) {
    tile.addEventListener("click", onClick);
  } else {
    tile.disabled = true;
  }
  return tile;
}

function renderOutfit(
  session: WorkbenchSession,
  clusters: ClusterMap,
  container: HTMLElement,
): void {
  container.replaceChildren();
  container.appendChild(el("h2", undefined, "Current outfit"));
  if (session.picks.length === 0) {
    container.appendChild(
      el("p", "hint", "Pick a product from any panel to start an outfit."),
    );
    return;
  }
  const row = el("div", "outfit-row");
  for (const pick of session.picks) {
    const cell = el("div", "outfit-cell");
    cell.appendChild(productTile(pick, clusters, undefined, undefined));
    const removeButton = el("button", "remove", `remove ${pick.slot}`);
    removeButton.addEventListener("click", () => void session.remove(pick.slot));
    cell.appendChild(removeButton);
    row.appendChild(cell);
  }
  container.appendChild(row);
}

function renderPanel(
  session: WorkbenchSession,
  panel: PanelState,
  clusters: ClusterMap,
): HTMLElement {
  const box = el("section", `panel panel-${panel.status}`);
  const heading = el("h3", undefined, panel.slot);
  heading.appendChild(el("span", "status", panel.status));
  box.appendChild(heading);
  if (panel.status === "error") {
    box.appendChild(el("p", "error", panel.message ?? "request failed"));
    return box;
  }
  const list = el("div", "tiles");
  if (panel.items.length > 0) {
    for (const item of panel.items) {
      const product: ProductRef = { id: item.product_id, slot: item.slot };
      list.appendChild(
        productTile(product, clusters, item.score, () => void session.pick(product)),
      );
    }
  } else {
    for (const product of panel.stock.slice(0, 12)) {
      list.appendChild(
        productTile(product, clusters, undefined, () => void session.pick(product)),
      );
    }
  }
  box.appendChild(list);
  return box;
}

export function render(
  session: WorkbenchSession,
  clusters: ClusterMap,
  root: HTMLElement,
): void {
  let outfit = root.querySelector<HTMLElement>("#outfit");
  let panels = root.querySelector<HTMLElement>("#panels");
  if (!outfit || !panels) {
    root.replaceChildren();
    outfit = el("div");
    outfit.id = "outfit";
    panels = el("div");
    panels.id = "panels";
    root.append(outfit, panels);
  }
  renderOutfit(session, clusters, outfit);
  panels.replaceChildren();
  for (const slot of session.openSlots()) {
    const panel = session.panels.get(slot);
    if (panel) {
      panels.appendChild(renderPanel(session, panel, clusters));
    }
  }
}
