/**
 * SVG renderer for the schedule chart: a blue bar per task for the planned
 * interval, a gray overlay for reported completion, a done badge when the
 * task is finished. Pure string building over the view model, so equal
 * documents render byte-identical markup.
 */

import { buildViewModel, ChartViewModel, GanttDocument, RowGeometry } from "./model.js";

export const PLANNED_COLOR = "#4a90d9";
export const COMPLETED_COLOR = "#9aa0a6";

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function axisMarkup(vm: ChartViewModel): string {
  const parts: string[] = [];
  for (const tick of vm.ticks) {
    parts.push(
      `<line class="grid" x1="${tick.x}" y1="${vm.axisHeight - 4}" x2="${tick.x}" y2="${vm.height - 6}" stroke="#e0e0e0" stroke-width="1"/>`,
      `<text class="tick" x="${tick.x}" y="${vm.axisHeight - 10}" font-size="9" text-anchor="middle" fill="#666">${tick.label}</text>`,
    );
  }
  return parts.join("");
}

function rowMarkup(row: RowGeometry, vm: ChartViewModel): string {
  const barY = row.y + (vm.rowHeight - vm.barHeight) / 2;
  const labelY = row.y + vm.rowHeight / 2 + 4;
  const parts = [
    `<text class="row-label" x="8" y="${labelY}" font-size="12" fill="#222">${escapeXml(row.taskName)}</text>`,
    `<text class="row-manager" x="${vm.labelGutter - 10}" y="${labelY}" font-size="10" text-anchor="end" fill="#777">${escapeXml(row.manager)}</text>`,
    `<rect class="bar-planned" data-task="${escapeXml(row.taskName)}" x="${row.planned.x}" y="${barY}" width="${Math.max(row.planned.width, 1)}" height="${vm.barHeight}" rx="3" fill="${PLANNED_COLOR}"/>`,
  ];
  if (row.completed !== null) {
    const overlayY = barY + 3;
    parts.push(
      `<rect class="bar-completed" data-task="${escapeXml(row.taskName)}" x="${row.completed.x}" y="${overlayY}" width="${Math.max(row.completed.width, 1)}" height="${vm.barHeight - 6}" rx="2" fill="${COMPLETED_COLOR}"/>`,
    );
  }
  if (row.flag === "done") {
    parts.push(
      `<text class="done-badge" data-task="${escapeXml(row.taskName)}" x="${row.planned.x + Math.max(row.planned.width, 1) + 6}" y="${labelY}" font-size="10" fill="#188038">done</text>`,
    );
  }
  return parts.join("");
}

function dependencyMarkup(vm: ChartViewModel): string {
  const byName = new Map(vm.rows.map((row) => [row.taskName, row]));
  const parts: string[] = [];
  for (const row of vm.rows) {
    for (const depName of row.dependence) {
      const dep = byName.get(depName);
      if (dep === undefined) {
        continue;
      }
      const fromX = dep.planned.x + dep.planned.width;
      const fromY = dep.y + vm.rowHeight / 2;
      const toX = row.planned.x;
      const toY = row.y + vm.rowHeight / 2;
      parts.push(
        `<path class="dep-arrow" d="M ${fromX} ${fromY} L ${toX} ${fromY} L ${toX} ${toY}" fill="none" stroke="#bbb" stroke-width="1" stroke-dasharray="3,2"/>`,
      );
    }
  }
  return parts.join("");
}

export function renderGantt(doc: GanttDocument, width = 960): string {
  const vm = buildViewModel(doc, width);
  const pieces = [
    `<svg xmlns="http://www.w3.org/2000/svg" class="gantt" width="${vm.width}" height="${vm.height}" viewBox="0 0 ${vm.width} ${vm.height}">`,
    axisMarkup(vm),
    dependencyMarkup(vm),
  ];
  if (vm.rows.length === 0) {
    pieces.push(
      `<text class="empty-hint" x="${vm.labelGutter}" y="${vm.axisHeight + 20}" font-size="12" fill="#888">No tasks assigned yet. Use Assign to schedule the first one.</text>`,
    );
  } else {
    for (const row of vm.rows) {
      pieces.push(rowMarkup(row, vm));
    }
  }
  pieces.push("</svg>");
  return pieces.join("");
}
