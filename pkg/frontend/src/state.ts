// Cockpit state: connection watchdog, newest-pose guard, bounded windows.
// Everything here can be rebuilt from the API after a refresh.

import type { Pose, SampleInfo, TelemetryEvent } from "./api.js";

export type Connection = "connecting" | "live" | "lost";

export const LOSS_TIMEOUT_MS = 2000;

export interface TracePoint {
  t_us: number;
  x_m: number;
  y_m: number;
  heading_deg: number;
}

export class CockpitState {
  connection: Connection = "connecting";
  pose: Pose | null = null;
  trace: TracePoint[] = [];
  series = new Map<number, Array<[number, number]>>();
  latestSamples = new Map<number, SampleInfo>();
  pendingDrive = false;
  staleEvents = 0;

  constructor(
    private traceCapacity = 2000,
    private seriesCapacity = 600,
    private now: () => number = () => Date.now(),
  ) {}

  private lastHeardMs: number | null = null;

  /** Feed one telemetry event; stale (older-than-newest) events are dropped. */
  apply(event: TelemetryEvent): boolean {
    this.lastHeardMs = this.now();
    this.connection = "live";
    if (this.pose !== null && event.pose.t_us < this.pose.t_us) {
      this.staleEvents += 1;
      return false;
    }
    if (this.pose === null || event.pose.t_us > this.pose.t_us) {
      this.pose = event.pose;
      this.pushTrace(event.pose);
    }
    for (const key of Object.keys(event.samples)) {
      const sample = event.samples[key];
      const channel = Number(key);
      const previous = this.latestSamples.get(channel);
      if (previous !== undefined && sample.t_us <= previous.t_us) {
        continue;
      }
      this.latestSamples.set(channel, sample);
      const window = this.series.get(channel) ?? [];
      window.push([sample.t_us, sample.value]);
      if (window.length > this.seriesCapacity) {
        window.splice(0, window.length - this.seriesCapacity);
      }
      this.series.set(channel, window);
    }
    if (event.type === "pose") {
      this.pendingDrive = false; // a feedback-bearing event arrived
    }
    return true;
  }

  private pushTrace(pose: Pose): void {
    const last = this.trace[this.trace.length - 1];
    if (last !== undefined && pose.t_us <= last.t_us) {
      return;
    }
    this.trace.push({ t_us: pose.t_us, x_m: pose.x_m, y_m: pose.y_m,
                      heading_deg: pose.heading_deg });
    if (this.trace.length > this.traceCapacity) {
      this.trace.splice(0, this.trace.length - this.traceCapacity);
    }
  }

  seedTrace(points: Array<[number, number, number, number]>): void {
    this.trace = points.map(([t_us, x_m, y_m, heading_deg]) => (
      { t_us, x_m, y_m, heading_deg }));
  }

  markDrivePending(): void {
    this.pendingDrive = true;
  }

  /** Call periodically; flips to "lost" when nothing was heard for 2 s. */
  checkConnection(): Connection {
    if (this.lastHeardMs !== null && this.now() - this.lastHeardMs > LOSS_TIMEOUT_MS) {
      this.connection = "lost";
    }
    return this.connection;
  }

  get driveEnabled(): boolean {
    return this.connection === "live";
  }
}
