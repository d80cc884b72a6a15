// End-to-end console flow against a live `blelab serve`: pick the target,
// hold a notify in manual mode, edit it to 00ff, and watch the victim stream
// turn 255 bpm with an RSSI alert marker after the MitM start. The "browser"
// is the same modules the page runs, driven over node's WebSocket client.

import { spawn, type ChildProcess } from 'node:child_process'
import { mkdtempSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'
import WebSocket from 'ws'

import { ConsoleClient } from '../src/client.js'
import { hrPreview } from '../src/hex.js'
import {
  editHeld,
  initialState,
  reduce,
  victimBpm,
  type ConsoleState,
} from '../src/state.js'
import { renderInterceptPanel, renderRssiChart, renderTargetPicker } from '../src/ui.js'

const PORT = 8700 + (process.pid % 500)
const BASE = `http://127.0.0.1:${PORT}`

let server: ChildProcess
let client: ConsoleClient
let state: ConsoleState = initialState()
let lastTimeMs = 0

async function waitFor(predicate: () => boolean, timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    if (predicate()) return
    await new Promise((resolve) => setTimeout(resolve, 20))
  }
  throw new Error('timed out waiting for condition')
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), 'blelab-console-'))
  const configPath = join(dir, 'scenario.json')
  // Generous virtual timings: at --time-scale 20 the victim connects twelve
  // wall seconds in, leaving room to start the MitM first even on a loaded
  // machine, and the scenario outlives the whole test run.
  writeFileSync(
    configPath,
    JSON.stringify({ seed: 7, duration_ms: 4000000, connect_delay_ms: 240000 })
  )
  server = spawn(
    'blelab',
    ['serve', '--config', configPath, '--port', String(PORT), '--time-scale', '20'],
    { stdio: ['ignore', 'pipe', 'pipe'] }
  )
  server.stderr!.on('data', () => {})

  const deadline = Date.now() + 20000
  for (;;) {
    try {
      const reply = await fetch(`${BASE}/api/devices`)
      if (reply.ok) break
    } catch {
      if (Date.now() > deadline) throw new Error('serve did not come up')
    }
    await new Promise((resolve) => setTimeout(resolve, 100))
  }

  const socket = new WebSocket(`ws://127.0.0.1:${PORT}/ws`)
  await new Promise((resolve) => socket.addEventListener('open', resolve))
  client = new ConsoleClient(socket as any)
  client.onEvent((event) => {
    if ('time_ms' in event && typeof event.time_ms === 'number') {
      lastTimeMs = Math.max(lastTimeMs, event.time_ms)
    }
    state = reduce(state, event)
  })
}, 30000)

afterAll(() => {
  client?.close()
  server?.kill()
})

describe('end-to-end console flow', () => {
  let mitmStartMs = 0

  it('shows the live roster and lets the operator pick the sensor', async () => {
    client.listDevices()
    await waitFor(() => state.devices.some((d) => d.id === 'polar-h7'))
    const html = renderTargetPicker(state)
    expect(html).toContain('data-target="polar-h7"')
    expect(html).toContain('Idle')

    // the pre-attack RSSI trace is already streaming to the chart
    await waitFor(() => lastTimeMs >= 500 && state.rssi.length >= 5)
    mitmStartMs = lastTimeMs

    client.startMitm('polar-h7')
    await waitFor(() => state.sessionActive)
    expect(renderTargetPicker(state)).toContain('Active')
  }, 20000)

  it('holds a notify in manual mode and modifies it to 00ff', async () => {
    client.setManual(true)
    await waitFor(() => state.manualMode)
    client.setRules([
      { uuid: '0x2a37', direction: 'toCentral', transform: { type: 'passthrough' } },
    ])
    await waitFor(() => state.held.length > 0)

    const held = state.held[0]
    expect(held.uuid).toBe('0x2a37')
    state = editHeld(state, held.opId, '00ff')
    const panel = renderInterceptPanel(state, lastTimeMs)
    expect(panel).toContain('value="00ff"')
    expect(panel).toContain('255 bpm')
    expect(hrPreview(held.uuid, '00ff')).toBe(255)

    client.decide(held.opId, 'modify', '00ff')
    await waitFor(() =>
      state.ops.some(
        (op) => op.opId === held.opId && op.decision === 'manual-modify'
      )
    )
    const entry = state.ops.find((op) => op.opId === held.opId)!
    expect(entry.afterHex).toBe('00ff')
    expect(victimBpm(state)).toContain(255)
  }, 20000)

  it('keeps the victim stream at 255 bpm under an override rule', async () => {
    client.setManual(false)
    await waitFor(() => !state.manualMode)
    client.setRules([
      {
        uuid: '0x2a37',
        direction: 'toCentral',
        transform: { type: 'hr_override', bpm: 255 },
      },
    ])
    const seen = state.ops.length
    await waitFor(
      () =>
        state.ops.filter(
          (op) =>
            op.timeMs > 0 &&
            op.decision === 'auto' &&
            op.direction === 'toCentral' &&
            op.afterHex === '00ff'
        ).length >= 3 && state.ops.length > seen
    )
    const bpm = victimBpm(state)
    expect(bpm.slice(-3)).toEqual([255, 255, 255])
  }, 20000)

  it('marks the RSSI alert on the chart after the MitM start', async () => {
    await waitFor(() =>
      state.alerts.some((a) => a.kind === 'RssiIncrease' && a.timeMs > mitmStartMs)
    )
    const windowStart = state.rssi[0].timeMs
    await waitFor(() =>
      state.alerts.some((a) => a.kind === 'RssiIncrease' && a.timeMs >= windowStart)
    )
    const chart = renderRssiChart(state)
    expect(chart).toContain('class="alert-marker" data-kind="RssiIncrease"')
    expect(chart).toContain('<rect class="band"')
  }, 20000)
})
