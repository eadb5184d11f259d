/**
 * Sim-time ring buffer: keeps the last `horizonS` seconds of samples with a
 * hard element cap. All dashboard chart state lives in these, so reloading
 * and replaying the buffer reproduces the identical view.
 */

export interface TimedSample {
  t: number;
}

export class TimeRingBuffer<T extends TimedSample> {
  private buffer: T[] = [];

  constructor(
    readonly horizonS: number = 3600,
    readonly capacity: number = 50_000,
  ) {}

  push(sample: T): void {
    this.buffer.push(sample);
    const cutoff = sample.t - this.horizonS;
    let drop = 0;
    while (drop < this.buffer.length - 1 && this.buffer[drop].t < cutoff) {
      drop += 1;
    }
    if (this.buffer.length - drop > this.capacity) {
      drop = this.buffer.length - this.capacity;
    }
    if (drop > 0) {
      this.buffer = this.buffer.slice(drop);
    }
  }

  get length(): number {
    return this.buffer.length;
  }

  items(): readonly T[] {
    return this.buffer;
  }

  latest(): T | undefined {
    return this.buffer[this.buffer.length - 1];
  }

  clear(): void {
    this.buffer = [];
  }
}
