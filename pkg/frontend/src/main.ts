// Browser entry point: one WebSocket, one state object, full re-render on
// every server event. No optimistic updates; the server is the truth.

import { ConsoleClient } from './client.js'
import { isValidHex } from './hex.js'
import { editHeld, initialState, reduce, type ConsoleState } from './state.js'
import { renderApp } from './ui.js'

function mount(root: HTMLElement): void {
  const proto = location.protocol === 'https:' ? 'wss' : 'ws'
  const socket = new WebSocket(`${proto}://${location.host}/ws`)
  const client = new ConsoleClient(socket as any)
  let state: ConsoleState = initialState()
  let lastTimeMs: number | null = null

  const render = () => {
    root.innerHTML = renderApp(state, lastTimeMs)
  }

  client.onEvent((event) => {
    if ('time_ms' in event && typeof event.time_ms === 'number') {
      lastTimeMs = event.time_ms
    }
    state = reduce(state, event)
    render()
  })

  socket.addEventListener('open', () => client.listDevices())
  // keep the roster's RSSI column fresh
  setInterval(() => client.listDevices(), 2000)

  root.addEventListener('click', (raw) => {
    const el = raw.target as HTMLElement
    if (el.matches('button.select')) {
      client.startMitm(el.dataset.target)
    } else if (el.matches('button.decide')) {
      const opId = Number(el.dataset.op)
      const action = el.dataset.action as 'forward' | 'modify' | 'drop'
      const held = state.held.find((h) => h.opId === opId)
      if (action === 'modify') {
        if (held === undefined || !isValidHex(held.afterHex)) return
        client.decide(opId, 'modify', held.afterHex)
      } else {
        client.decide(opId, action)
      }
    } else if (el.matches('button.replay')) {
      client.replay(Number(el.dataset.op))
    }
  })

  root.addEventListener('input', (raw) => {
    const el = raw.target as HTMLInputElement
    if (el.matches('input.hex-edit')) {
      const opId = Number(el.dataset.op)
      const caret = el.selectionStart
      state = editHeld(state, opId, el.value)
      render()
      const again = root.querySelector<HTMLInputElement>(
        `input.hex-edit[data-op="${opId}"]`
      )
      if (again !== null) {
        again.focus()
        if (caret !== null) again.setSelectionRange(caret, caret)
      }
    }
  })

  root.addEventListener('change', (raw) => {
    const el = raw.target as HTMLInputElement
    if (el.matches('input.manual-toggle')) {
      client.setManual(el.checked)
    }
  })
}

const root = document.getElementById('app')
if (root !== null) mount(root)
