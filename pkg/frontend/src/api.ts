// Typed client for the robot service. Every cockpit action maps to exactly
// one documented API call; all state the cockpit shows can be refetched.

export type Direction = "forward" | "backward" | "left" | "right" | "stop";

export interface Pose {
  x_m: number;
  y_m: number;
  heading_deg: number;
  t_us: number;
}

export interface SampleInfo {
  t_us: number;
  channel: number;
  gain: number | null;
  raw: number;
  value: number;
  unit: string;
}

export interface TelemetryEvent {
  type: "pose" | "sample";
  t_us: number;
  pose: Pose;
  samples: Record<string, SampleInfo>;
}

export interface ChannelInfo {
  id: number;
  kind: "analog" | "compass";
  sensor: string | null;
  unit: string;
  gain: number | null;
  interval_s: number;
}

export type SeriesPoint = [number, number]; // [t_us, value]

export interface DriveCall {
  method: "POST";
  path: "/api/drive";
  body: { direction: Direction; steps?: number };
}

/** Pure mapping from a pad press to the one documented drive request. */
export function driveRequest(direction: Direction, steps?: number): DriveCall {
  if (direction === "stop" && steps !== undefined) {
    throw new Error("stop never carries a step count");
  }
  if (steps !== undefined && (!Number.isInteger(steps) || steps < 1)) {
    throw new Error("steps must be a positive integer");
  }
  const body: DriveCall["body"] = { direction };
  if (steps !== undefined) {
    body.steps = steps;
  }
  return { method: "POST", path: "/api/drive", body };
}

export class ApiClient {
  constructor(private base: string = "") {}

  async drive(direction: Direction, steps?: number): Promise<void> {
    const call = driveRequest(direction, steps);
    const response = await fetch(this.base + call.path, {
      method: call.method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(call.body),
    });
    if (!response.ok) {
      throw new Error(`drive rejected: ${response.status}`);
    }
  }

  async pose(): Promise<Pose> {
    return this.getJson("/api/pose");
  }

  async footprint(limit = 2000): Promise<Array<[number, number, number, number]>> {
    const body = await this.getJson(`/api/footprint?limit=${limit}`);
    return body.points;
  }

  async channels(): Promise<ChannelInfo[]> {
    const body = await this.getJson("/api/channels");
    return body.channels;
  }

  async data(
    channel: number,
    options: { fromUs?: number; bucket?: number; stat?: string } = {},
  ): Promise<{ unit: string; points?: SeriesPoint[]; rows?: SeriesPoint[] }> {
    const params = new URLSearchParams();
    if (options.fromUs !== undefined) params.set("from", String(options.fromUs));
    if (options.bucket !== undefined) params.set("bucket", String(options.bucket));
    if (options.stat !== undefined) params.set("stat", options.stat);
    const query = params.toString();
    return this.getJson(`/api/data/${channel}${query ? "?" + query : ""}`);
  }

  private async getJson(path: string): Promise<any> {
    const response = await fetch(this.base + path);
    if (!response.ok) {
      throw new Error(`${path}: ${response.status}`);
    }
    return response.json();
  }
}

export interface TelemetrySource {
  close(): void;
}

/**
 * Live telemetry: server-sent events first, plain polling as the fallback so
 * the cockpit still works behind proxies that buffer streams.
 */
export function openTelemetry(
  onEvent: (event: TelemetryEvent) => void,
  options: { base?: string; pollMs?: number; forcePolling?: boolean } = {},
): TelemetrySource {
  const base = options.base ?? "";
  if (!options.forcePolling && typeof EventSource !== "undefined") {
    const source = new EventSource(base + "/api/stream");
    source.onmessage = (message) => {
      onEvent(JSON.parse(message.data) as TelemetryEvent);
    };
    return { close: () => source.close() };
  }
  const client = new ApiClient(base);
  const timer = setInterval(async () => {
    try {
      const pose = await client.pose();
      onEvent({ type: "pose", t_us: pose.t_us, pose, samples: {} });
    } catch {
      // watchdog in the state layer reports the outage
    }
  }, options.pollMs ?? 500);
  return { close: () => clearInterval(timer) };
}
