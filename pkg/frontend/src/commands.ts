/**
 * Supervisory command tracking: every sent command resolves to exactly one
 * accept/reject ack (correlated by the echoed ref), and accepted commands
 * later resolve to a completed/failed ack (correlated by cmd_id).
 */

import { CommandParams, Frame, encodeCommand } from "./protocol.js";

export type CommandStatus =
  | "pending"
  | "accepted"
  | "rejected"
  | "completed"
  | "failed"
  | "timeout";

export interface TrackedCommand {
  ref: string;
  kind: string;
  sentWallMs: number;
  status: CommandStatus;
  reason?: string;
  cmdId?: number;
}

export const ACK_TIMEOUT_MS = 5000;

export class CommandTracker {
  private nextRef = 1;
  readonly commands: TrackedCommand[] = [];
  private byRef = new Map<string, TrackedCommand>();
  private byCmdId = new Map<number, TrackedCommand>();

  /** Build the wire line for a command and start tracking it. */
  send(kind: string, params: CommandParams, wallNowMs: number = Date.now()): {
    ref: string;
    line: string;
  } {
    const ref = `c${this.nextRef++}`;
    const tracked: TrackedCommand = {
      ref,
      kind,
      sentWallMs: wallNowMs,
      status: "pending",
    };
    this.commands.push(tracked);
    this.byRef.set(ref, tracked);
    return { ref, line: encodeCommand(kind, { ...params, ref }) };
  }

  /** Feed every incoming frame; ack frames resolve tracked commands. */
  onFrame(frame: Frame): TrackedCommand | undefined {
    if (frame.type !== "ack") return undefined;
    const status = String(frame.payload.status ?? "");
    const ref = frame.payload.ref !== undefined ? String(frame.payload.ref) : undefined;
    const cmdId =
      frame.payload.cmd_id !== undefined ? Number(frame.payload.cmd_id) : undefined;

    let tracked: TrackedCommand | undefined;
    if (ref && this.byRef.has(ref)) {
      tracked = this.byRef.get(ref);
    } else if (cmdId !== undefined && this.byCmdId.has(cmdId)) {
      tracked = this.byCmdId.get(cmdId);
    }
    if (!tracked) return undefined;

    if (status === "accepted") {
      tracked.status = "accepted";
      if (cmdId !== undefined) {
        tracked.cmdId = cmdId;
        this.byCmdId.set(cmdId, tracked);
      }
    } else if (status === "rejected") {
      tracked.status = "rejected";
      tracked.reason = frame.payload.reason ? String(frame.payload.reason) : undefined;
    } else if (status === "completed" || status === "failed") {
      tracked.status = status;
      tracked.reason = frame.payload.reason ? String(frame.payload.reason) : undefined;
    }
    return tracked;
  }

  /** Mark commands whose accept/reject ack never arrived. */
  expire(wallNowMs: number, timeoutMs: number = ACK_TIMEOUT_MS): TrackedCommand[] {
    const expired: TrackedCommand[] = [];
    for (const tracked of this.commands) {
      if (tracked.status === "pending" && wallNowMs - tracked.sentWallMs > timeoutMs) {
        tracked.status = "timeout";
        expired.push(tracked);
      }
    }
    return expired;
  }

  /** True while any command awaits its accept/reject ack (disables the panel). */
  hasPending(): boolean {
    return this.commands.some((c) => c.status === "pending");
  }

  latest(count = 8): readonly TrackedCommand[] {
    return this.commands.slice(-count);
  }
}
