// HTML/SVG renderers. Pure string-in-string-out so they are testable without
// a browser; main.ts mounts the output and wires the events.

import { hrPreview, isValidHex } from './hex.js'
import {
  baselineBand,
  victimBpm,
  type ConsoleState,
  type UiHeldOp,
} from './state.js'

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
}

export function renderTargetPicker(state: ConsoleState): string {
  const rows = state.devices
    .map((device) => {
      const rssi = device.rssi === null ? 'n/a' : `${device.rssi.toFixed(1)} dBm`
      const tag = device.isFake ? ' <span class="fake">fake</span>' : ''
      const disabled = state.sessionActive || device.isFake ? ' disabled' : ''
      return (
        `<li>` +
        `<button class="select" data-target="${escapeHtml(device.id)}"${disabled}>select</button> ` +
        `${escapeHtml(device.name)} (${escapeHtml(device.address)}) ${rssi}${tag}` +
        `</li>`
      )
    })
    .join('')
  const badge = state.sessionActive
    ? '<span class="badge active">Active</span>'
    : '<span class="badge idle">Idle</span>'
  return `<h2>Targets ${badge}</h2><ul class="roster">${rows}</ul>`
}

function renderHeld(held: UiHeldOp, nowMs: number | null): string {
  const valid = isValidHex(held.afterHex)
  const preview = hrPreview(held.uuid, held.afterHex)
  const previewText =
    preview === null ? '' : ` <span class="hr-preview">${preview} bpm</span>`
  const countdown =
    nowMs === null
      ? ''
      : ` <span class="countdown">${Math.max(0, Math.round((held.deadlineMs - nowMs) / 1000))}s</span>`
  const invalid = valid ? '' : ' <span class="invalid">invalid hex</span>'
  return (
    `<li data-op="${held.opId}">` +
    `#${held.opId} ${held.direction} ${escapeHtml(held.uuid)}${countdown}` +
    `<input class="hex-edit" data-op="${held.opId}" value="${escapeHtml(held.afterHex)}">` +
    `${previewText}${invalid}` +
    `<button class="decide" data-op="${held.opId}" data-action="forward">forward</button>` +
    `<button class="decide" data-op="${held.opId}" data-action="modify"${valid ? '' : ' disabled'}>modify</button>` +
    `<button class="decide" data-op="${held.opId}" data-action="drop">drop</button>` +
    `</li>`
  )
}

export function renderInterceptPanel(
  state: ConsoleState,
  nowMs: number | null = null
): string {
  const toggle =
    `<label><input type="checkbox" class="manual-toggle"` +
    `${state.manualMode ? ' checked' : ''}> manual mode</label>`
  const rows = state.held.map((held) => renderHeld(held, nowMs)).join('')
  const empty = state.held.length === 0 ? '<p class="empty">no held operations</p>' : ''
  return `<h2>Intercept</h2>${toggle}<ul class="held">${rows}</ul>${empty}`
}

export function renderOpLog(state: ConsoleState): string {
  const rows = state.ops
    .slice(-30)
    .map((op) => {
      const changed = op.beforeHex === op.afterHex ? '' : ` -&gt; ${op.afterHex}`
      return (
        `<li>t=${op.timeMs} ${op.direction} ${escapeHtml(op.uuid)} ` +
        `${op.beforeHex}${changed} [${escapeHtml(op.decision)}] ` +
        `<button class="replay" data-op="${op.opId}">replay</button></li>`
      )
    })
    .join('')
  const bpm = victimBpm(state)
  const tail = bpm.slice(-10).join(' ')
  return (
    `<h2>Operations</h2><ul class="ops">${rows}</ul>` +
    `<p class="victim-bpm">victim bpm: ${tail}</p>`
  )
}

const CHART_W = 600
const CHART_H = 160

export function renderRssiChart(state: ConsoleState): string {
  const samples = state.rssi
  if (samples.length < 2) {
    return '<h2>Victim RSSI</h2><p class="empty">waiting for samples</p>'
  }
  const t0 = samples[0].timeMs
  const t1 = samples[samples.length - 1].timeMs
  const values = samples.map((s) => s.dbm)
  const band = baselineBand(samples)
  let lo = Math.min(...values)
  let hi = Math.max(...values)
  if (band !== null) {
    lo = Math.min(lo, band.mu - band.halfWidth)
    hi = Math.max(hi, band.mu + band.halfWidth)
  }
  const pad = Math.max(1, (hi - lo) * 0.1)
  lo -= pad
  hi += pad
  const x = (t: number) => (((t - t0) / Math.max(1, t1 - t0)) * CHART_W).toFixed(1)
  const y = (v: number) => (CHART_H - ((v - lo) / (hi - lo)) * CHART_H).toFixed(1)

  let bandRect = ''
  if (band !== null) {
    const top = y(band.mu + band.halfWidth)
    const height = (
      parseFloat(y(band.mu - band.halfWidth)) - parseFloat(top)
    ).toFixed(1)
    bandRect =
      `<rect class="band" x="0" y="${top}" width="${CHART_W}" height="${height}"/>` +
      `<line class="mu" x1="0" y1="${y(band.mu)}" x2="${CHART_W}" y2="${y(band.mu)}"/>`
  }
  const points = samples.map((s) => `${x(s.timeMs)},${y(s.dbm)}`).join(' ')
  const markers = state.alerts
    .filter((a) => a.timeMs >= t0 && a.timeMs <= t1)
    .map(
      (a) =>
        `<circle class="alert-marker" data-kind="${escapeHtml(a.kind)}" ` +
        `cx="${x(a.timeMs)}" cy="8" r="5"/>`
    )
    .join('')
  return (
    `<h2>Victim RSSI</h2>` +
    `<svg class="rssi-chart" viewBox="0 0 ${CHART_W} ${CHART_H}" ` +
    `width="${CHART_W}" height="${CHART_H}">` +
    `${bandRect}<polyline class="trace" fill="none" points="${points}"/>${markers}` +
    `</svg>`
  )
}

export function renderErrorToast(state: ConsoleState): string {
  if (state.lastError === null) return ''
  return `<div class="toast error">${escapeHtml(state.lastError)}</div>`
}

export function renderApp(state: ConsoleState, nowMs: number | null = null): string {
  return (
    renderErrorToast(state) +
    `<div class="col">${renderTargetPicker(state)}${renderInterceptPanel(state, nowMs)}</div>` +
    `<div class="col">${renderRssiChart(state)}${renderOpLog(state)}</div>`
  )
}
