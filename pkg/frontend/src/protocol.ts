/**
 * Telemetry wire protocol v1 (see PROTOCOL.md at the repository root).
 *
 * One frame per line:
 *   v1 type=<type> seq=<int> t=<float> [patient=<B0i>] k=v ...
 * Values are percent-encoded when they contain anything outside the token
 * alphabet; decoding types them by lexical form (int, float, else string).
 */

export const PROTOCOL_VERSION = "v1";

export const FRAME_TYPES = [
  "vitals",
  "med",
  "mode",
  "alert",
  "pose",
  "ack",
  "cmd",
] as const;

export type FrameType = (typeof FRAME_TYPES)[number];

export type PayloadValue = string | number;

export interface Frame {
  type: FrameType;
  seq: number;
  t: number;
  patient?: string;
  payload: Record<string, PayloadValue>;
}

export class DecodeError extends Error {
  readonly offset: number;

  constructor(message: string, offset = 0) {
    super(`${message} (byte offset ${offset})`);
    this.offset = offset;
  }
}

const TOKEN_SAFE = /^[A-Za-z0-9_.:+\-]*$/;
const INT_RE = /^-?\d+$/;
const FLOAT_RE = /^-?(\d+\.\d*|\.\d+|\d+)([eE][-+]?\d+)?$/;

function encodeValue(value: PayloadValue): string {
  const text =
    typeof value === "number" && Number.isInteger(value)
      ? String(value)
      : String(value);
  if (TOKEN_SAFE.test(text) && !text.includes("%")) {
    return text;
  }
  return encodeURIComponent(text).replace(
    /[!'()*]/g,
    (c) => "%" + c.charCodeAt(0).toString(16).toUpperCase(),
  );
}

function decodeValue(text: string): PayloadValue {
  const raw = decodeURIComponent(text);
  if (INT_RE.test(raw)) return parseInt(raw, 10);
  if (FLOAT_RE.test(raw)) return parseFloat(raw);
  return raw;
}

export function decodeFrame(line: string): Frame {
  const stripped = line.replace(/\n+$/, "");
  if (!stripped.trim()) throw new DecodeError("empty line", 0);
  const tokens = stripped.split(" ");
  if (tokens[0] !== PROTOCOL_VERSION) {
    throw new DecodeError(`unsupported version ${tokens[0]}`, 0);
  }
  const fields = new Map<string, string>();
  let offset = tokens[0].length + 1;
  for (const token of tokens.slice(1)) {
    if (!token) throw new DecodeError("empty token", offset);
    const eq = token.indexOf("=");
    if (eq < 0) throw new DecodeError(`token ${token} missing '='`, offset);
    const key = token.slice(0, eq);
    if (fields.has(key)) throw new DecodeError(`duplicate key ${key}`, offset);
    fields.set(key, token.slice(eq + 1));
    offset += token.length + 1;
  }
  for (const required of ["type", "seq", "t"]) {
    if (!fields.has(required)) {
      throw new DecodeError(`missing required key ${required}`, 0);
    }
  }
  const type = fields.get("type")!;
  if (!(FRAME_TYPES as readonly string[]).includes(type)) {
    throw new DecodeError(`unknown frame type ${type}`, 0);
  }
  const seq = Number(fields.get("seq"));
  const t = Number(fields.get("t"));
  if (!Number.isInteger(seq) || seq < 0 || !Number.isFinite(t)) {
    throw new DecodeError("bad header value", 0);
  }
  fields.delete("type");
  fields.delete("seq");
  fields.delete("t");
  let patient: string | undefined;
  if (fields.has("patient")) {
    patient = String(decodeValue(fields.get("patient")!));
    fields.delete("patient");
  }
  const payload: Record<string, PayloadValue> = {};
  for (const [key, value] of fields) {
    payload[key] = decodeValue(value);
  }
  return { type: type as FrameType, seq, t, patient, payload };
}

export interface CommandParams {
  node?: string;
  degrees?: number;
  liters?: number;
  valve1?: number;
  valve2?: number;
  valve3?: number;
  volume_l?: number;
  mask?: 0 | 1;
  times?: string;
  ref?: string;
}

/** Encode a supervisory command as a wire cmd frame line. */
export function encodeCommand(kind: string, params: CommandParams = {}): string {
  const parts = [PROTOCOL_VERSION, "type=cmd", "seq=0", "t=0.0", `kind=${kind}`];
  const keys = Object.keys(params).sort() as (keyof CommandParams)[];
  for (const key of keys) {
    const value = params[key];
    if (value === undefined || value === null) continue;
    parts.push(`${key}=${encodeValue(value as PayloadValue)}`);
  }
  return parts.join(" ");
}
