// Message shapes for the control API. The console never invents state:
// everything rendered comes from one of these server events.

export type Direction = 'toCentral' | 'toPeripheral'

export interface DeviceEvent {
  type: 'device'
  id: string
  name: string
  address: string
  is_fake: boolean
  rssi: number | null
}

export interface OpEvent {
  type: 'op'
  held: boolean
  op_id: number
  time_ms: number
  direction: Direction
  uuid: string
  before_hex: string
  // present on journal entries (held === false)
  after_hex?: string
  decision?: string
  // present on holds (held === true)
  deadline_ms?: number
}

export interface AlertEvent {
  type: 'alert'
  kind: string
  time_ms: number
  score: number
}

export interface RssiEvent {
  type: 'rssi'
  time_ms: number
  dbm: number
}

export interface AckEvent {
  type: 'ack'
  of: string
  [extra: string]: unknown
}

export interface ErrorEvent {
  type: 'error'
  message: string
}

export type ServerEvent =
  | DeviceEvent
  | OpEvent
  | AlertEvent
  | RssiEvent
  | AckEvent
  | ErrorEvent

export interface TransformSpec {
  type: string
  [extra: string]: unknown
}

export interface RuleSpec {
  uuid: string
  direction: Direction
  transform: TransformSpec
}

export type DecisionAction = 'forward' | 'modify' | 'drop'

export type ClientCommand =
  | { type: 'list_devices' }
  | { type: 'start_mitm'; target?: string }
  | { type: 'stop_mitm' }
  | { type: 'set_rules'; rules: RuleSpec[] }
  | { type: 'set_manual'; on: boolean }
  | { type: 'decision'; op_id: number; action: DecisionAction; bytes_hex?: string }
  | { type: 'replay'; op_id: number }
