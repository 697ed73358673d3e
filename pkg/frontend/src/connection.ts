// Session connection: strictly increasing seq, one in-flight command.
// Commands issued while a response is pending are queued and sent only
// after the previous response has been delivered to the handler.

import { Command, Request, StateResponse, isStateResponse } from "./protocol.js";

export interface WireSocket {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  onopen: ((ev: unknown) => void) | null;
}

export interface SessionEvents {
  onState(response: StateResponse): void;
  onProtocolError(message: string): void;
  onConnectionChange(connected: boolean): void;
}

export class UiSession {
  readonly sessionId: string;
  private seq = 0;
  private socket: WireSocket | null = null;
  private queue: Command[] = [];
  private inFlight = false;
  private events: SessionEvents;

  constructor(sessionId: string, events: SessionEvents) {
    this.sessionId = sessionId;
    this.events = events;
  }

  attach(socket: WireSocket | WebSocket): void {
    const wire = socket as WireSocket;
    this.socket = wire;
    wire.onopen = () => this.events.onConnectionChange(true);
    wire.onclose = () => this.events.onConnectionChange(false);
    wire.onerror = () => this.events.onConnectionChange(false);
    wire.onmessage = (ev) => this.receive(String(ev.data));
  }

  get pendingCount(): number {
    return this.queue.length + (this.inFlight ? 1 : 0);
  }

  send(command: Command): void {
    this.queue.push(command);
    this.pump();
  }

  private pump(): void {
    if (this.inFlight || !this.socket || this.queue.length === 0) return;
    const command = this.queue.shift() as Command;
    this.seq += 1;
    const request: Request = {
      session: this.sessionId,
      seq: this.seq,
      command,
    };
    this.inFlight = true;
    this.socket.send(JSON.stringify(request));
  }

  private receive(data: string): void {
    this.inFlight = false;
    let parsed: unknown;
    try {
      parsed = JSON.parse(data);
    } catch {
      this.events.onProtocolError("malformed response (not JSON)");
      return;
    }
    if (!isStateResponse(parsed)) {
      this.events.onProtocolError("malformed response (missing fields)");
      return;
    }
    this.events.onState(parsed);
    this.pump();
  }
}
