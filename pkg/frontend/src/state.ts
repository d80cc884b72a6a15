// Client-side view state. One pure reducer folds server events into it, so
// reconnecting and replaying the live stream rebuilds the same view; nothing
// here simulates anything.

import { HR_MEASUREMENT_UUID, hrPreview } from './hex.js'
import type { Direction, ServerEvent } from './protocol.js'

export const CHART_CAPACITY = 300
export const OP_LOG_CAPACITY = 500
export const ALERT_CAPACITY = 300

export interface DeviceEntry {
  id: string
  name: string
  address: string
  isFake: boolean
  rssi: number | null
}

export interface UiHeldOp {
  opId: number
  direction: Direction
  uuid: string
  beforeHex: string
  afterHex: string // the operator's edit; starts equal to beforeHex
  deadlineMs: number
}

export interface OpRow {
  opId: number
  timeMs: number
  direction: Direction
  uuid: string
  beforeHex: string
  afterHex: string
  decision: string
}

export interface RssiSample {
  timeMs: number
  dbm: number
}

export interface AlertMark {
  kind: string
  timeMs: number
  score: number
}

export interface ConsoleState {
  devices: DeviceEntry[]
  ops: OpRow[]
  held: UiHeldOp[]
  rssi: RssiSample[]
  alerts: AlertMark[]
  sessionActive: boolean
  manualMode: boolean
  lastError: string | null
}

export function initialState(): ConsoleState {
  return {
    devices: [],
    ops: [],
    held: [],
    rssi: [],
    alerts: [],
    sessionActive: false,
    manualMode: false,
    lastError: null,
  }
}

function upsertDevice(devices: DeviceEntry[], entry: DeviceEntry): DeviceEntry[] {
  const index = devices.findIndex((d) => d.id === entry.id)
  if (index < 0) return [...devices, entry]
  const next = devices.slice()
  next[index] = entry
  return next
}

export function reduce(state: ConsoleState, event: ServerEvent): ConsoleState {
  switch (event.type) {
    case 'device':
      return {
        ...state,
        devices: upsertDevice(state.devices, {
          id: event.id,
          name: event.name,
          address: event.address,
          isFake: event.is_fake,
          rssi: event.rssi,
        }),
      }
    case 'op': {
      if (event.held) {
        if (state.held.some((h) => h.opId === event.op_id)) return state
        const held: UiHeldOp = {
          opId: event.op_id,
          direction: event.direction,
          uuid: event.uuid,
          beforeHex: event.before_hex,
          afterHex: event.before_hex,
          deadlineMs: event.deadline_ms ?? event.time_ms,
        }
        return { ...state, held: [...state.held, held] }
      }
      if (state.ops.some((o) => o.opId === event.op_id)) return state
      const row: OpRow = {
        opId: event.op_id,
        timeMs: event.time_ms,
        direction: event.direction,
        uuid: event.uuid,
        beforeHex: event.before_hex,
        afterHex: event.after_hex ?? event.before_hex,
        decision: event.decision ?? 'auto',
      }
      return {
        ...state,
        ops: [...state.ops, row].slice(-OP_LOG_CAPACITY),
        held: state.held.filter((h) => h.opId !== event.op_id),
      }
    }
    case 'rssi': {
      if (state.rssi.some((s) => s.timeMs === event.time_ms)) return state
      const sample = { timeMs: event.time_ms, dbm: event.dbm }
      return { ...state, rssi: [...state.rssi, sample].slice(-CHART_CAPACITY) }
    }
    case 'alert': {
      const duplicate = state.alerts.some(
        (a) => a.timeMs === event.time_ms && a.kind === event.kind
      )
      if (duplicate) return state
      const mark = { kind: event.kind, timeMs: event.time_ms, score: event.score }
      return { ...state, alerts: [...state.alerts, mark].slice(-ALERT_CAPACITY) }
    }
    case 'ack':
      if (event.of === 'start_mitm') return { ...state, sessionActive: true }
      if (event.of === 'stop_mitm') return { ...state, sessionActive: false }
      if (event.of === 'set_manual') {
        return { ...state, manualMode: Boolean(event.on) }
      }
      return state
    case 'error':
      return { ...state, lastError: event.message }
  }
}

/** Record the operator's hex edit on a held op (editable only while held). */
export function editHeld(
  state: ConsoleState,
  opId: number,
  afterHex: string
): ConsoleState {
  const index = state.held.findIndex((h) => h.opId === opId)
  if (index < 0) return state
  const held = state.held.slice()
  held[index] = { ...held[index], afterHex }
  return { ...state, held }
}

/** The heart-rate stream as the victim central decodes it: every forwarded
 * 0x2A37 notify toward the central, after whatever the proxy did to it. */
export function victimBpm(state: ConsoleState): number[] {
  const out: number[] = []
  for (const op of state.ops) {
    if (op.direction !== 'toCentral') continue
    if (op.uuid.toLowerCase() !== HR_MEASUREMENT_UUID) continue
    if (op.decision === 'manual-drop') continue
    const bpm = hrPreview(op.uuid, op.afterHex)
    if (bpm !== null) out.push(bpm)
  }
  return out
}

export interface BaselineBand {
  mu: number
  halfWidth: number
}

/** Baseline band for the RSSI chart, mu +/- z*sigma/sqrt(w), fitted from the
 * first k samples the way the victim's detector freezes its baseline. */
export function baselineBand(
  samples: RssiSample[],
  k = 20,
  z = 3.0,
  w = 5,
  sigmaFloor = 0.5
): BaselineBand | null {
  if (samples.length < k) return null
  const head = samples.slice(0, k).map((s) => s.dbm)
  const mu = head.reduce((a, b) => a + b, 0) / k
  const variance = head.reduce((a, b) => a + (b - mu) ** 2, 0) / (k - 1)
  const sigma = Math.max(Math.sqrt(variance), sigmaFloor)
  return { mu, halfWidth: (z * sigma) / Math.sqrt(w) }
}
