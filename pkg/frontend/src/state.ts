/**
 * Dashboard state reducer. All view state derives from decoded frames, so
 * replaying a buffered stream reproduces the identical dashboard.
 */

import { Frame } from "./protocol.js";
import { TimeRingBuffer } from "./ring.js";

export interface VitalPoint {
  t: number;
  v: number;
}

export interface PatientPanel {
  hr: TimeRingBuffer<VitalPoint>;
  spo2: TimeRingBuffer<VitalPoint>;
  tempF: TimeRingBuffer<VitalPoint>;
  flags: string;
  lastMeasuredT: number;
  medMarkers: { t: number; medicine: string }[];
}

export interface MedEntry {
  t: number;
  patient: string;
  medicine: string;
  duration: number;
  mode: string;
}

export interface AlertEntry {
  t: number;
  reason: string;
  detail: string;
  patient?: string;
}

export interface RobotStatus {
  x: number;
  y: number;
  heading: number;
  battery: number;
  cameraDeg: number;
  mode: string;
  node?: string;
  purpose?: string;
}

export interface DashboardState {
  patients: Map<string, PatientPanel>;
  meds: MedEntry[];
  alerts: AlertEntry[];
  robot: RobotStatus;
  vitalsFramesSeen: number;
  framesSeen: number;
  lastSimT: number;
  lastFrameWallMs: number;
  horizonS: number;
}

export function createState(horizonS = 3600): DashboardState {
  return {
    patients: new Map(),
    meds: [],
    alerts: [],
    robot: { x: 0, y: 0, heading: 0, battery: 1, cameraDeg: 0, mode: "docked" },
    vitalsFramesSeen: 0,
    framesSeen: 0,
    lastSimT: 0,
    lastFrameWallMs: 0,
    horizonS,
  };
}

function panelFor(state: DashboardState, patient: string): PatientPanel {
  let panel = state.patients.get(patient);
  if (!panel) {
    panel = {
      hr: new TimeRingBuffer(state.horizonS),
      spo2: new TimeRingBuffer(state.horizonS),
      tempF: new TimeRingBuffer(state.horizonS),
      flags: "-",
      lastMeasuredT: 0,
      medMarkers: [],
    };
    state.patients.set(patient, panel);
  }
  return panel;
}

export function applyFrame(
  state: DashboardState,
  frame: Frame,
  wallNowMs: number = Date.now(),
): void {
  state.framesSeen += 1;
  state.lastSimT = Math.max(state.lastSimT, frame.t);
  state.lastFrameWallMs = wallNowMs;

  switch (frame.type) {
    case "vitals": {
      if (!frame.patient) break;
      const panel = panelFor(state, frame.patient);
      panel.hr.push({ t: frame.t, v: Number(frame.payload.hr) });
      panel.spo2.push({ t: frame.t, v: Number(frame.payload.spo2) });
      panel.tempF.push({ t: frame.t, v: Number(frame.payload.temp_f) });
      panel.flags = String(frame.payload.flags ?? "-");
      panel.lastMeasuredT = frame.t;
      state.vitalsFramesSeen += 1;
      break;
    }
    case "med": {
      if (!frame.patient) break;
      const entry: MedEntry = {
        t: frame.t,
        patient: frame.patient,
        medicine: String(frame.payload.medicine ?? "?"),
        duration: Number(frame.payload.duration ?? 0),
        mode: String(frame.payload.mode ?? "routine"),
      };
      state.meds.push(entry);
      panelFor(state, frame.patient).medMarkers.push({
        t: frame.t,
        medicine: entry.medicine,
      });
      break;
    }
    case "alert": {
      state.alerts.push({
        t: frame.t,
        reason: String(frame.payload.reason ?? "?"),
        detail: String(frame.payload.detail ?? frame.payload.count ?? ""),
        patient: frame.patient,
      });
      break;
    }
    case "pose": {
      state.robot.x = Number(frame.payload.x);
      state.robot.y = Number(frame.payload.y);
      state.robot.heading = Number(frame.payload.heading);
      state.robot.battery = Number(frame.payload.battery);
      state.robot.cameraDeg = Number(frame.payload.camera_deg ?? 0);
      state.robot.mode = String(frame.payload.mode ?? state.robot.mode);
      break;
    }
    case "mode": {
      const mode = String(frame.payload.mode ?? "");
      if (
        ["docked", "navigating", "measuring", "dispensing", "returning", "fault"].includes(mode)
      ) {
        state.robot.mode = mode;
        state.robot.node = frame.payload.node ? String(frame.payload.node) : undefined;
        state.robot.purpose = frame.payload.purpose
          ? String(frame.payload.purpose)
          : undefined;
      }
      if (mode === "camera_pan") {
        state.robot.cameraDeg = Number(frame.payload.camera_deg ?? 0);
      }
      break;
    }
    default:
      break;
  }
}

/** Total chart points in one vital series across all patients. */
export function chartPointCount(state: DashboardState): number {
  let count = 0;
  for (const panel of state.patients.values()) {
    count += panel.hr.length;
  }
  return count;
}

/** Stream considered stale after 5 s without frames (disconnected banner). */
export function isStale(state: DashboardState, wallNowMs: number, staleMs = 5000): boolean {
  if (state.framesSeen === 0) return true;
  return wallNowMs - state.lastFrameWallMs > staleMs;
}
