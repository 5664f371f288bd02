/**
 * Gateway connection: feeds every inbound message through the store and
 * exposes typed send helpers. A socket factory is injected so tests can
 * run against `ws` in Node while the browser uses the native WebSocket.
 * Dropped connections show a reconnect banner and retry with backoff;
 * probing is suspended until the session is re-established.
 */

import { MessageWriter, PROTOCOL_VERSION, Tool } from "./protocol.js";
import { TrainerStore } from "./store.js";

// handler params are `any` so the browser WebSocket and the `ws` package
// both satisfy the shape
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  url: string;
  store: TrainerStore;
  socketFactory: SocketFactory;
  now?: () => number;
  reconnect?: boolean;
  onMessage?: (raw: string) => void;
}

export class GatewayClient {
  private socket: SocketLike | null = null;
  private writer = new MessageWriter();
  private reconnectAttempts = 0;
  private closedByUser = false;
  private readonly now: () => number;

  constructor(private options: ClientOptions) {
    this.now = options.now ?? (() => Date.now());
  }

  get store(): TrainerStore {
    return this.options.store;
  }

  connect(): void {
    const store = this.options.store;
    store.connection = this.reconnectAttempts ? "reconnecting" : "connecting";
    const socket = this.options.socketFactory(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectAttempts = 0;
      store.connection = "open";
      this.writer = new MessageWriter();
      socket.send(this.writer.hello());
    };
    socket.onmessage = (event) => {
      const raw = String(event.data);
      store.applyRaw(raw, this.now());
      this.options.onMessage?.(raw);
    };
    socket.onclose = () => {
      if (this.closedByUser) return;
      store.connection = "reconnecting";
      if (this.options.reconnect === false) return;
      const timeout = Math.min(500 * 2 ** this.reconnectAttempts, 10_000);
      this.reconnectAttempts += 1;
      setTimeout(() => this.connect(), timeout);
    };
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }

  get probingAllowed(): boolean {
    const store = this.options.store;
    return store.connection === "open" &&
      (store.phase === "scenario" || store.phase === "calibration");
  }

  private send(text: string): void {
    if (this.options.store.connection !== "open" || !this.socket) {
      return; // input suspended while disconnected
    }
    this.socket.send(text);
  }

  start(seed: number, config: Record<string, unknown> | null = null): void {
    this.send(this.writer.start(seed, config));
  }

  probe(t: number, pos: [number, number, number], tool: Tool = "babcock"): void {
    if (!this.probingAllowed) return;
    this.send(this.writer.probe(t, pos, tool));
  }

  advance(): void {
    this.send(this.writer.advance());
  }

  answer(choice: number | null, elapsed: number): void {
    this.send(this.writer.answer(choice, elapsed));
  }

  ctSelect(index: number): void {
    this.send(this.writer.ctSelect(index));
  }
}

export const HELLO_VERSION = PROTOCOL_VERSION;
