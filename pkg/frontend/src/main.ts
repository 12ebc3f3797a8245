// Cockpit wiring: drive pad, compass dial, footprint plot, channel charts.

import { ApiClient, ChannelInfo, Direction, openTelemetry } from "./api.js";
import { drawChart, tableRows } from "./chart.js";
import { drawCompass } from "./compass.js";
import { drawFootprint } from "./footprint.js";
import { CockpitState } from "./state.js";

const api = new ApiClient("");
const state = new CockpitState();

const statusEl = document.getElementById("status") as HTMLSpanElement;
const poseEl = document.getElementById("pose") as HTMLSpanElement;
const compassCanvas = document.getElementById("compass") as HTMLCanvasElement;
const footprintCanvas = document.getElementById("footprint") as HTMLCanvasElement;
const chartsEl = document.getElementById("charts") as HTMLDivElement;
const stepsInput = document.getElementById("steps") as HTMLInputElement;
const toastEl = document.getElementById("toast") as HTMLDivElement;

let channels: ChannelInfo[] = [];
const chartCanvases = new Map<number, HTMLCanvasElement>();
const tableBodies = new Map<number, HTMLTableSectionElement>();
const modes = new Map<number, "graph" | "table">();
let dirty = true;

function toast(message: string): void {
  toastEl.textContent = message;
  toastEl.classList.add("visible");
  setTimeout(() => toastEl.classList.remove("visible"), 2500);
}

function stepsValue(): number | undefined {
  const raw = stepsInput.value.trim();
  if (raw === "") {
    return undefined;
  }
  const n = Number(raw);
  return Number.isInteger(n) && n >= 1 ? n : undefined;
}

async function press(direction: Direction): Promise<void> {
  if (direction !== "stop" && !state.driveEnabled) {
    return; // pad is disabled while disconnected; stop stays available
  }
  try {
    await api.drive(direction, direction === "stop" ? undefined : stepsValue());
    state.markDrivePending();
  } catch (error) {
    toast(String(error));
  }
  dirty = true;
}

function buildPad(): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>("[data-drive]")) {
    button.addEventListener("click", () => press(button.dataset.drive as Direction));
  }
  document.addEventListener("keydown", (event) => {
    const keys: Record<string, Direction> = {
      ArrowUp: "forward", ArrowDown: "backward",
      ArrowLeft: "left", ArrowRight: "right", " ": "stop",
    };
    const direction = keys[event.key];
    if (direction !== undefined) {
      event.preventDefault();
      void press(direction);
    }
  });
}

function buildChannelCards(): void {
  for (const channel of channels) {
    const card = document.createElement("div");
    card.className = "card";
    const title = document.createElement("h3");
    title.textContent = `channel ${channel.id} (${channel.sensor ?? channel.kind}, ${channel.unit})`;
    const toggle = document.createElement("button");
    toggle.textContent = "table";
    toggle.addEventListener("click", () => {
      const next = modes.get(channel.id) === "table" ? "graph" : "table";
      modes.set(channel.id, next);
      toggle.textContent = next === "table" ? "graph" : "table";
      canvas.style.display = next === "table" ? "none" : "block";
      table.style.display = next === "table" ? "table" : "none";
      if (next === "table") {
        void refreshTable(channel.id);
      }
      dirty = true;
    });
    title.appendChild(toggle);
    const canvas = document.createElement("canvas");
    canvas.width = 420;
    canvas.height = 160;
    const table = document.createElement("table");
    table.style.display = "none";
    table.innerHTML = "<thead><tr><th>t (s)</th><th>mean</th></tr></thead>";
    const body = document.createElement("tbody");
    table.appendChild(body);
    card.append(title, canvas, table);
    chartsEl.appendChild(card);
    chartCanvases.set(channel.id, canvas);
    tableBodies.set(channel.id, body);
    modes.set(channel.id, "graph");
  }
}

async function refreshTable(channelId: number): Promise<void> {
  const body = tableBodies.get(channelId);
  if (body === undefined) {
    return;
  }
  try {
    const data = await api.data(channelId, { bucket: 60, stat: "mean" });
    body.innerHTML = "";
    for (const row of tableRows(data.rows ?? [])) {
      const tr = document.createElement("tr");
      tr.innerHTML = `<td>${row.t_s}</td><td>${row.value}</td>`;
      body.appendChild(tr);
    }
  } catch (error) {
    toast(String(error));
  }
}

function render(): void {
  const connection = state.checkConnection();
  statusEl.textContent = connection;
  statusEl.className = `status ${connection}${state.pendingDrive ? " pending" : ""}`;
  for (const button of document.querySelectorAll<HTMLButtonElement>("[data-drive]")) {
    button.disabled = button.dataset.drive !== "stop" && !state.driveEnabled;
  }
  if (!dirty) {
    return;
  }
  dirty = false;
  const pose = state.pose;
  if (pose !== null) {
    poseEl.textContent =
      `x ${pose.x_m.toFixed(3)} m   y ${pose.y_m.toFixed(3)} m   ` +
      `heading ${pose.heading_deg.toFixed(1)}°   t ${(pose.t_us / 1e6).toFixed(1)} s`;
    const ctx = compassCanvas.getContext("2d");
    if (ctx !== null) {
      drawCompass(ctx, pose.heading_deg, compassCanvas.width);
    }
  }
  const footprintCtx = footprintCanvas.getContext("2d");
  if (footprintCtx !== null) {
    drawFootprint(footprintCtx, state.trace, footprintCanvas.width, footprintCanvas.height);
  }
  for (const channel of channels) {
    if (modes.get(channel.id) !== "graph") {
      continue;
    }
    const canvas = chartCanvases.get(channel.id);
    const ctx = canvas?.getContext("2d");
    if (canvas !== undefined && ctx !== null && ctx !== undefined) {
      drawChart(ctx, state.series.get(channel.id) ?? [], channel.unit,
                canvas.width, canvas.height);
    }
  }
}

async function boot(): Promise<void> {
  buildPad();
  try {
    channels = await api.channels();
    buildChannelCards();
    state.seedTrace(await api.footprint());
    for (const channel of channels) {
      const data = await api.data(channel.id);
      if (data.points !== undefined && data.points.length > 0) {
        state.series.set(channel.id, data.points.slice(-600));
      }
    }
  } catch {
    // the stream watchdog will show "lost" until the service answers
  }
  openTelemetry((event) => {
    state.apply(event);
    dirty = true;
  });
  const frame = (): void => {
    render();
    requestAnimationFrame(frame); // coalesce updates per animation frame
  };
  frame();
}

void boot();
