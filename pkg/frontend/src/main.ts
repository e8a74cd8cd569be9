/** Entry point: wires the API client, session, header controls, and renderer. */

import { ApiClient } from "./api.js";
import { WorkbenchSession } from "./session.js";
import type { ModelName } from "./types.js";
import { ClusterMap, parseTruthSidecar } from "./truth.js";
import { render } from "./ui.js";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ??
  "http://127.0.0.1:8080";

let clusters: ClusterMap = new Map();

function bindHeader(session: WorkbenchSession): void {
  const modelSelect = document.querySelector<HTMLSelectElement>("#model");
  modelSelect?.addEventListener("change", () => {
    void session.setModel(modelSelect.value as ModelName);
  });

  const windowInput = document.querySelector<HTMLInputElement>("#window");
  windowInput?.addEventListener("change", () => {
    const value = windowInput.value.trim();
    void session.setWindow(value === "" ? undefined : Number(value));
  });

  const beamInput = document.querySelector<HTMLInputElement>("#beam-width");
  const seedInput = document.querySelector<HTMLInputElement>("#seed");
  document.querySelector("#generate")?.addEventListener("click", () => {
    const beamWidth = Number(beamInput?.value ?? "5") || 5;
    const seed = Number(seedInput?.value ?? "0") || 0;
    void session.generateOutfit(beamWidth, seed);
  });

  const truthInput = document.querySelector<HTMLInputElement>("#truth-file");
  truthInput?.addEventListener("change", async () => {
    const file = truthInput.files?.[0];
    if (file) {
      clusters = parseTruthSidecar(await file.text());
      rerender(session);
    }
  });
}

let rootElement: HTMLElement;

function rerender(session: WorkbenchSession): void {
  render(session, clusters, rootElement);
}

async function bootstrap(): Promise<void> {
  rootElement = document.querySelector<HTMLElement>("#app") ?? document.body;
  const client = new ApiClient(SERVICE_URL);
  const session = new WorkbenchSession(client, {
    topK: 10,
    model: "mean",
    onChange: () => rerender(session),
  });
  bindHeader(session);
  try {
    await session.init();
  } catch (error) {
    rootElement.textContent = `service unreachable at ${SERVICE_URL}: ${error}`;
  }
}

void bootstrap();
