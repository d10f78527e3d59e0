/**
 * Chart document types (the server's process_gantt payload) and the pure
 * geometry mapping from days to pixels. Bar geometry is a function of the
 * document and the viewport width only, so identical documents always
 * produce identical charts.
 */

export interface DayWindow {
  beginTime: string;
  endTime: string;
}

export interface CompletedInterval {
  beginTime: string;
  completedTime: string;
}

export type TaskFlag = "processing" | "done";

export interface GanttRow {
  taskName: string;
  manager: string;
  plannedInterval: DayWindow;
  completedInterval: CompletedInterval | null;
  flag: TaskFlag;
  dependence: string[];
}

export interface GanttDocument {
  projectName: string;
  window: DayWindow;
  rows: GanttRow[];
}

export interface ProjectRecord {
  projectName: string;
  manager: string;
  flag: TaskFlag;
  beginTime: string;
  endTime: string;
  tasks: { userNumber: string; taskName: string }[];
  info: string;
}

const MS_PER_DAY = 86_400_000;

export function dayIndex(isoDay: string): number {
  const parsed = Date.parse(`${isoDay}T00:00:00Z`);
  if (Number.isNaN(parsed)) {
    throw new Error(`not an ISO day string: ${isoDay}`);
  }
  return parsed / MS_PER_DAY;
}

export interface BarBox {
  x: number;
  width: number;
}

export interface RowGeometry {
  taskName: string;
  manager: string;
  flag: TaskFlag;
  dependence: string[];
  y: number;
  planned: BarBox;
  completed: BarBox | null;
}

export interface AxisTick {
  x: number;
  label: string;
}

export interface ChartViewModel {
  width: number;
  height: number;
  labelGutter: number;
  rowHeight: number;
  barHeight: number;
  axisHeight: number;
  ticks: AxisTick[];
  rows: RowGeometry[];
}

export const LAYOUT = {
  labelGutter: 180,
  rowHeight: 30,
  barHeight: 16,
  axisHeight: 26,
  rightPad: 16,
  maxTicks: 8,
} as const;

const round2 = (value: number) => Math.round(value * 100) / 100;

/** Day-to-x and row-to-y mapping for one document at one viewport width. */
export function buildViewModel(doc: GanttDocument, width: number): ChartViewModel {
  const start = dayIndex(doc.window.beginTime);
  const end = dayIndex(doc.window.endTime);
  const span = Math.max(end - start, 1);
  const plotWidth = Math.max(width - LAYOUT.labelGutter - LAYOUT.rightPad, 50);

  const xFor = (isoDay: string) =>
    round2(LAYOUT.labelGutter + ((dayIndex(isoDay) - start) / span) * plotWidth);

  const rows: RowGeometry[] = doc.rows.map((row, index) => {
    const x0 = xFor(row.plannedInterval.beginTime);
    const x1 = xFor(row.plannedInterval.endTime);
    const planned: BarBox = { x: x0, width: round2(x1 - x0) };
    let completed: BarBox | null = null;
    if (row.completedInterval !== null) {
      const cx0 = xFor(row.completedInterval.beginTime);
      const cx1 = xFor(row.completedInterval.completedTime);
      completed = { x: cx0, width: round2(cx1 - cx0) };
    }
    return {
      taskName: row.taskName,
      manager: row.manager,
      flag: row.flag,
      dependence: [...row.dependence],
      y: LAYOUT.axisHeight + index * LAYOUT.rowHeight,
      planned,
      completed,
    };
  });

  const tickStep = Math.max(Math.ceil(span / LAYOUT.maxTicks), 1);
  const ticks: AxisTick[] = [];
  for (let day = 0; day <= span; day += tickStep) {
    const iso = new Date((start + day) * MS_PER_DAY).toISOString().slice(0, 10);
    ticks.push({ x: xFor(iso), label: iso });
  }

  return {
    width,
    height: LAYOUT.axisHeight + Math.max(rows.length, 1) * LAYOUT.rowHeight + 8,
    labelGutter: LAYOUT.labelGutter,
    rowHeight: LAYOUT.rowHeight,
    barHeight: LAYOUT.barHeight,
    axisHeight: LAYOUT.axisHeight,
    ticks,
    rows,
  };
}
