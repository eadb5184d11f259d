/**
 * Operator console wiring: WebSocket ingestion into the dashboard state,
 * periodic rendering, staleness banner, and the supervisory command panel.
 */

import { CommandTracker } from "./commands.js";
import { CommandParams, decodeFrame } from "./protocol.js";
import { drawSparkline } from "./sparkline.js";
import {
  DashboardState,
  applyFrame,
  createState,
  isStale,
} from "./state.js";

const state: DashboardState = createState();
const tracker = new CommandTracker();
let socket: WebSocket | null = null;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function connect(): void {
  const url = `ws://${location.host}/ws`;
  socket = new WebSocket(url);
  socket.onmessage = (event) => {
    try {
      const frame = decodeFrame(String(event.data));
      applyFrame(state, frame);
      tracker.onFrame(frame);
    } catch {
      // Malformed line: resynchronize on the next newline-delimited frame.
    }
  };
  socket.onclose = () => {
    socket = null;
    setTimeout(connect, 1000);
  };
}

function sendCommand(kind: string, params: CommandParams): void {
  if (!socket || socket.readyState !== WebSocket.OPEN) return;
  const { line } = tracker.send(kind, params);
  socket.send(line);
}

function patientCard(patient: string): HTMLElement {
  const id = `patient-${patient}`;
  const existing = document.getElementById(id);
  if (existing) return existing;
  const card = document.createElement("div");
  card.className = "card patient";
  card.id = id;
  card.innerHTML = `
    <div class="card-head"><span class="pid">${patient}</span>
      <span class="badge" data-role="flags">-</span></div>
    <canvas data-role="hr" width="220" height="42"></canvas>
    <canvas data-role="spo2" width="220" height="42"></canvas>
    <canvas data-role="temp" width="220" height="42"></canvas>`;
  $("patients").appendChild(card);
  return card;
}

function renderPatients(): void {
  const sorted = [...state.patients.keys()].sort();
  for (const patient of sorted) {
    const panel = state.patients.get(patient)!;
    const card = patientCard(patient);
    const badge = card.querySelector('[data-role="flags"]') as HTMLElement;
    badge.textContent = panel.flags;
    badge.className = `badge ${panel.flags === "normal" ? "ok" : "warn"}`;
    const markers = panel.medMarkers.map((m) => m.t);
    drawSparkline(
      card.querySelector('[data-role="hr"]') as HTMLCanvasElement,
      panel.hr.items(), { color: "#7ad", label: "HR", markers },
    );
    drawSparkline(
      card.querySelector('[data-role="spo2"]') as HTMLCanvasElement,
      panel.spo2.items(), { color: "#8c8", label: "SpO2", markers },
    );
    drawSparkline(
      card.querySelector('[data-role="temp"]') as HTMLCanvasElement,
      panel.tempF.items(), { color: "#d88", label: "Temp", markers },
    );
  }
}

function renderMap(): void {
  const canvas = $("ward-map") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  const roomW = 12.0;
  const roomH = 8.0;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#446";
  ctx.strokeRect(4, 4, width - 8, height - 8);
  const px = (x: number) => 4 + (x / roomW) * (width - 8);
  const py = (y: number) => height - 4 - (y / roomH) * (height - 8);
  const robot = state.robot;
  ctx.fillStyle = robot.mode === "fault" ? "#f55" : "#6cf";
  ctx.beginPath();
  ctx.arc(px(robot.x), py(robot.y), 6, 0, Math.PI * 2);
  ctx.fill();
  ctx.strokeStyle = "#fff";
  ctx.beginPath();
  ctx.moveTo(px(robot.x), py(robot.y));
  ctx.lineTo(
    px(robot.x + 0.5 * Math.cos(robot.heading)),
    py(robot.y + 0.5 * Math.sin(robot.heading)),
  );
  ctx.stroke();
}

function renderStatus(): void {
  const robot = state.robot;
  $("robot-mode").textContent =
    robot.mode + (robot.node ? ` (${robot.node}${robot.purpose === "supervisory" ? ", supervisory" : ""})` : "");
  $("robot-battery").textContent = `${(robot.battery * 100).toFixed(1)}%`;
  $("robot-camera").textContent = `${robot.cameraDeg.toFixed(0)} deg`;
  $("sim-time").textContent = `${state.lastSimT.toFixed(1)} s`;
  $("banner").classList.toggle("hidden", !isStale(state, Date.now()));
}

function renderLists(): void {
  const meds = $("med-log");
  meds.innerHTML = state.meds
    .slice(-12)
    .map(
      (m) =>
        `<li>t=${m.t.toFixed(1)} ${m.patient} ${m.medicine} ` +
        `${m.duration.toFixed(2)}s <em>${m.mode}</em></li>`,
    )
    .reverse()
    .join("");
  const alerts = $("alert-log");
  alerts.innerHTML = state.alerts
    .slice(-8)
    .map((a) => `<li>t=${a.t.toFixed(1)} ${a.patient ?? ""} ${a.reason} ${a.detail}</li>`)
    .reverse()
    .join("");
  const acks = $("command-log");
  acks.innerHTML = tracker
    .latest()
    .map(
      (c) =>
        `<li class="${c.status}">${c.ref} ${c.kind} &rarr; ${c.status}` +
        `${c.reason ? ` (${c.reason})` : ""}</li>`,
    )
    .reverse()
    .join("");
}

function render(): void {
  tracker.expire(Date.now());
  renderPatients();
  renderMap();
  renderStatus();
  renderLists();
  const supervisory = ($("supervisory-toggle") as HTMLInputElement).checked;
  ($("command-panel") as HTMLFieldSetElement).disabled =
    !supervisory || tracker.hasPending();
}

function wireCommandPanel(): void {
  const node = () => ($("node-select") as HTMLSelectElement).value;
  $("btn-checkup").onclick = () => sendCommand("priority_checkup", { node: node() });
  $("btn-dispense").onclick = () => {
    const valve = ($("valve-select") as HTMLSelectElement).value;
    const params: CommandParams = { node: node() };
    if (valve === "1") params.valve1 = 2.88;
    if (valve === "2") params.valve2 = 2.88;
    if (valve === "3") params.valve3 = 2.88;
    sendCommand("manual_dispense", params);
  };
  $("btn-fluid").onclick = () =>
    sendCommand("fluid_supply", {
      node: node(),
      liters: Number(($("fluid-liters") as HTMLInputElement).value || "0.05"),
    });
  $("btn-pan").onclick = () =>
    sendCommand("camera_pan", {
      degrees: Number(($("pan-degrees") as HTMLInputElement).value || "0"),
    });
  $("btn-dock").onclick = () => sendCommand("return_to_dock", {});
}

export function start(): void {
  wireCommandPanel();
  connect();
  setInterval(render, 250);
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
