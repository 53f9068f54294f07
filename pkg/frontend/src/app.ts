/**
 * Browser application shell: connects to the scene websocket, keeps the
 * receiver in sync, and wires gestures / layer toggles / HUD into the
 * render loop. Transport and clock are injectable so the core logic is
 * testable off-browser.
 */

import { Camera } from "./camera.js";
import { BUILTIN_CLASSES, LayerState } from "./pois.js";
import {
  decodeFrame,
  encodeFrame,
  encodeSubscribe,
  frame,
  SUBSCRIBE,
} from "./protocol.js";
import { SceneReceiver } from "./receiver.js";
import { DEFAULT_RENDERER_CONFIG, SplatRenderer } from "./renderer.js";
import { FrameStats } from "./stats.js";
import {
  applyDelta,
  GripPair,
  identityTransform,
  reset,
  solveGrip,
  Vec3,
  WimTransform,
} from "./wim.js";

export interface SocketLike {
  send(data: Uint8Array): void;
  close(): void;
  onmessage: ((data: Uint8Array) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface AppConfig {
  wsUrl: string;
  apiBase: string;
  reconnectDelayMs: number;
}

export class App {
  receiver = new SceneReceiver();
  camera = new Camera();
  layers = new LayerState();
  wim: WimTransform = identityTransform();
  renderer = new SplatRenderer(DEFAULT_RENDERER_CONFIG);
  stats = new FrameStats();
  connected = false;

  private socket: SocketLike | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    readonly config: AppConfig,
    private readonly makeSocket: SocketFactory,
  ) {}

  connect(): void {
    this.stopped = false;
    const sock = this.makeSocket(this.config.wsUrl);
    this.socket = sock;
    sock.onopen = () => {
      this.connected = true;
      // resume from the last scene version we already hold
      sock.send(
        encodeFrame(frame(SUBSCRIBE, 0, encodeSubscribe(this.receiver.sceneVersion))),
      );
    };
    sock.onmessage = (data) => {
      let off = 0;
      while (off < data.length) {
        const [f, next] = decodeFrame(data, off);
        this.receiver.feed(f);
        off = next;
      }
    };
    sock.onclose = () => {
      this.connected = false;
      if (this.stopped) return;
      this.reconnectTimer = setTimeout(
        () => this.connect(),
        this.config.reconnectDelayMs,
      );
    };
  }

  stop(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
    this.socket = null;
    this.connected = false;
  }

  /** Two-pointer gesture step: pinch scales, twist rotates, drag pans. */
  gripMove(prev: [Vec3, Vec3], curr: [Vec3, Vec3]): void {
    const grip: GripPair = {
      leftPrev: prev[0],
      rightPrev: prev[1],
      leftCurr: curr[0],
      rightCurr: curr[1],
    };
    this.wim = applyDelta(this.wim, solveGrip(grip));
  }

  resetWim(): void {
    this.wim = reset(this.wim);
  }

  toggleLayer(name: string): void {
    this.layers = this.layers.toggle(name);
  }

  /** Text for the connection / version badge. */
  statusLine(): string {
    const version = this.receiver.sceneVersion.toString();
    if (!this.connected) return `disconnected (scene v${version} stale)`;
    const progress = this.receiver.snapshotProgress;
    if (progress !== null) {
      return `syncing ${(100 * progress).toFixed(0)}% (scene v${version})`;
    }
    return `scene v${version}`;
  }

  hudLine(): string {
    const fps = this.stats.fpsEquiv;
    const count = this.receiver.scene?.count ?? 0;
    if (fps === null) return `${count} splats`;
    return `${count} splats | ${fps.toFixed(1)} fps`;
  }
}

/** Wire the app into a real browser page; no-op under test runners. */
export function mount(doc: Document, win: Window & typeof globalThis): App {
  const canvas = doc.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const badge = doc.getElementById("badge")!;
  const hud = doc.getElementById("hud")!;
  const layerPanel = doc.getElementById("layers")!;
  const resetBtn = doc.getElementById("reset")!;

  const proto = win.location.protocol === "https:" ? "wss" : "ws";
  const app = new App(
    {
      wsUrl: `${proto}://${win.location.host}/ws/scene`,
      apiBase: "",
      reconnectDelayMs: 1000,
    },
    (url) => {
      const ws = new win.WebSocket(url);
      ws.binaryType = "arraybuffer";
      const like: SocketLike = {
        send: (d) => ws.send(new Uint8Array(d).buffer),
        close: () => ws.close(),
        onmessage: null,
        onclose: null,
        onopen: null,
      };
      ws.onopen = () => like.onopen?.();
      ws.onclose = () => like.onclose?.();
      ws.onmessage = (ev) => like.onmessage?.(new Uint8Array(ev.data));
      return like;
    },
  );

  for (const name of BUILTIN_CLASSES) {
    const label = doc.createElement("label");
    const box = doc.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => app.toggleLayer(name));
    label.appendChild(box);
    label.appendChild(doc.createTextNode(name));
    layerPanel.appendChild(label);
  }
  resetBtn.addEventListener("click", () => app.resetWim());

  // single-pointer drag orbits; two pointers drive the grip solver
  const pointers = new Map<number, Vec3>();
  const toWorld = (ev: PointerEvent): Vec3 => [
    (ev.clientX - canvas.width / 2) / 200,
    -(ev.clientY - canvas.height / 2) / 200,
    0,
  ];
  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    pointers.set(ev.pointerId, toWorld(ev));
  });
  canvas.addEventListener("pointermove", (ev) => {
    const prev = pointers.get(ev.pointerId);
    if (!prev) return;
    const curr = toWorld(ev);
    if (pointers.size === 1) {
      app.camera.orbit((curr[0] - prev[0]) * 1.5, -(curr[1] - prev[1]) * 1.5);
    } else if (pointers.size === 2) {
      const ids = [...pointers.keys()];
      const other = ids.find((id) => id !== ev.pointerId)!;
      const otherPos = pointers.get(other)!;
      try {
        app.gripMove([prev, otherPos], [curr, otherPos]);
      } catch {
        // coincident pointers: ignore this sample
      }
    }
    pointers.set(ev.pointerId, curr);
  });
  const lift = (ev: PointerEvent) => pointers.delete(ev.pointerId);
  canvas.addEventListener("pointerup", lift);
  canvas.addEventListener("pointercancel", lift);
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    app.camera.zoom(ev.deltaY > 0 ? 1.1 : 1 / 1.1);
  });

  app.connect();

  let last = win.performance.now();
  const tick = () => {
    const now = win.performance.now();
    app.stats.push(now - last);
    last = now;
    app.renderer.render(
      ctx,
      app.receiver.scene,
      app.camera,
      app.receiver.pois,
      app.layers,
      app.wim,
    );
    badge.textContent = app.statusLine();
    badge.className = app.connected ? "ok" : "stale";
    hud.textContent = app.hudLine();
    win.requestAnimationFrame(tick);
  };
  win.requestAnimationFrame(tick);
  return app;
}
