import { describe, expect, it } from 'vitest'

import type { ServerEvent } from '../src/protocol.js'
import { editHeld, initialState, reduce, type ConsoleState } from '../src/state.js'
import {
  renderErrorToast,
  renderInterceptPanel,
  renderOpLog,
  renderRssiChart,
  renderTargetPicker,
} from '../src/ui.js'

function fold(events: ServerEvent[], start?: ConsoleState): ConsoleState {
  return events.reduce(reduce, start ?? initialState())
}

const roster: ServerEvent[] = [
  {
    type: 'device',
    id: 'polar-h7',
    name: 'PolarSim H7',
    address: 'C0:FF:EE:00:00:01',
    is_fake: false,
    rssi: -60.5,
  },
  {
    type: 'device',
    id: 'polar-h7-core',
    name: 'PolarSim H7',
    address: 'AA:AA:AA:00:00:01',
    is_fake: true,
    rssi: null,
  },
]

describe('target picker', () => {
  it('lists devices with a select button per real device', () => {
    const html = renderTargetPicker(fold(roster))
    expect(html).toContain('data-target="polar-h7"')
    expect(html).toContain('PolarSim H7')
    expect(html).toContain('-60.5 dBm')
    expect(html).toContain('class="fake"')
  })

  it('disables selection while a session is active', () => {
    const idle = renderTargetPicker(fold(roster))
    expect(idle).toContain('<span class="badge idle">Idle</span>')
    expect(idle).toContain('data-target="polar-h7">select')
    const active = renderTargetPicker(
      fold([{ type: 'ack', of: 'start_mitm', state: 'Active' }], fold(roster))
    )
    expect(active).toContain('<span class="badge active">Active</span>')
    expect(active).toContain('data-target="polar-h7" disabled')
  })
})

describe('intercept panel', () => {
  const held: ServerEvent = {
    type: 'op',
    held: true,
    op_id: 7,
    time_ms: 2000,
    direction: 'toCentral',
    uuid: '0x2a37',
    before_hex: '0046',
    deadline_ms: 32000,
  }

  it('shows the held op with a live heart-rate preview', () => {
    const html = renderInterceptPanel(fold([held]))
    expect(html).toContain('value="0046"')
    expect(html).toContain('70 bpm')
    expect(html).toContain('data-action="modify"')
  })

  it('updates the preview when the bytes are edited to 00ff', () => {
    const state = editHeld(fold([held]), 7, '00ff')
    const html = renderInterceptPanel(state)
    expect(html).toContain('value="00ff"')
    expect(html).toContain('255 bpm')
  })

  it('blocks modify on invalid hex', () => {
    const state = editHeld(fold([held]), 7, '0xnope')
    const html = renderInterceptPanel(state)
    expect(html).toContain('invalid hex')
    expect(html).toContain('data-action="modify" disabled')
  })

  it('shows the countdown to the hold timeout', () => {
    const html = renderInterceptPanel(fold([held]), 4000)
    expect(html).toContain('<span class="countdown">28s</span>')
  })
})

describe('rssi chart', () => {
  function chartState(): ConsoleState {
    const events: ServerEvent[] = []
    for (let i = 0; i < 25; i++) {
      events.push({ type: 'rssi', time_ms: i * 100, dbm: -60 + (i % 2) })
    }
    events.push({ type: 'alert', kind: 'RssiIncrease', time_ms: 2025, score: 4.0 })
    events.push({ type: 'rssi', time_ms: 2500, dbm: -52 })
    return fold(events)
  }

  it('draws the trace, the baseline band, and alert markers', () => {
    const html = renderRssiChart(chartState())
    expect(html).toContain('<polyline class="trace"')
    expect(html).toContain('<rect class="band"')
    expect(html).toContain('class="alert-marker" data-kind="RssiIncrease"')
  })

  it('waits quietly while samples are missing', () => {
    const html = renderRssiChart(initialState())
    expect(html).toContain('waiting for samples')
    expect(html).not.toContain('<svg')
  })
})

describe('op log and errors', () => {
  it('shows before/after bytes and the victim bpm tail', () => {
    const state = fold([
      {
        type: 'op',
        held: false,
        op_id: 1,
        time_ms: 2037,
        direction: 'toCentral',
        uuid: '0x2a37',
        before_hex: '0046',
        after_hex: '00ff',
        decision: 'auto',
      },
    ])
    const html = renderOpLog(state)
    expect(html).toContain('0046 -&gt; 00ff')
    expect(html).toContain('[auto]')
    expect(html).toContain('victim bpm: 255')
    expect(html).toContain('class="replay" data-op="1"')
  })

  it('renders server errors as a visible toast, escaped', () => {
    const state = fold([{ type: 'error', message: 'unknown target <tv>' }])
    expect(renderErrorToast(state)).toBe(
      '<div class="toast error">unknown target &lt;tv&gt;</div>'
    )
    expect(renderErrorToast(initialState())).toBe('')
  })
})
