// Thin wrapper over the control channel. Every user action maps to exactly
// one outgoing message; incoming events are parsed and handed to listeners.

import type {
  ClientCommand,
  DecisionAction,
  RuleSpec,
  ServerEvent,
} from './protocol.js'

/** The slice of WebSocket both the browser class and node's `ws` provide. */
export interface SocketLike {
  send(data: string): void
  addEventListener(kind: 'open' | 'message' | 'close', cb: (event: any) => void): void
  close(): void
}

export type EventListener = (event: ServerEvent) => void

export class ConsoleClient {
  private listeners: EventListener[] = []

  constructor(private socket: SocketLike) {
    socket.addEventListener('message', (event) => {
      let parsed: ServerEvent
      try {
        parsed = JSON.parse(String(event.data))
      } catch {
        return
      }
      this.listeners.forEach((listener) => listener(parsed))
    })
  }

  onEvent(listener: EventListener): void {
    this.listeners.push(listener)
  }

  send(command: ClientCommand): void {
    this.socket.send(JSON.stringify(command))
  }

  close(): void {
    this.socket.close()
  }

  listDevices(): void {
    this.send({ type: 'list_devices' })
  }

  startMitm(target?: string): void {
    this.send(target === undefined ? { type: 'start_mitm' } : { type: 'start_mitm', target })
  }

  stopMitm(): void {
    this.send({ type: 'stop_mitm' })
  }

  setRules(rules: RuleSpec[]): void {
    this.send({ type: 'set_rules', rules })
  }

  setManual(on: boolean): void {
    this.send({ type: 'set_manual', on })
  }

  decide(opId: number, action: DecisionAction, bytesHex?: string): void {
    const command: ClientCommand = { type: 'decision', op_id: opId, action }
    if (bytesHex !== undefined) command.bytes_hex = bytesHex
    this.send(command)
  }

  replay(opId: number): void {
    this.send({ type: 'replay', op_id: opId })
  }
}
