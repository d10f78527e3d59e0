import { describe, expect, it } from "vitest";

import { buildViewModel, dayIndex, GanttDocument, LAYOUT } from "../src/model.js";

const doc: GanttDocument = {
  projectName: "project1",
  window: { beginTime: "2020-11-15", endTime: "2020-12-31" },
  rows: [
    {
      taskName: "task1",
      manager: "user2",
      plannedInterval: { beginTime: "2020-11-15", endTime: "2020-11-28" },
      completedInterval: null,
      flag: "processing",
      dependence: [],
    },
    {
      taskName: "task2",
      manager: "user3",
      plannedInterval: { beginTime: "2020-11-29", endTime: "2020-12-05" },
      completedInterval: { beginTime: "2020-11-29", completedTime: "2020-12-01" },
      flag: "processing",
      dependence: ["task1"],
    },
  ],
};

describe("day arithmetic", () => {
  it("counts calendar days", () => {
    expect(dayIndex("2020-11-16") - dayIndex("2020-11-15")).toBe(1);
    expect(dayIndex("2020-12-31") - dayIndex("2020-11-15")).toBe(46);
  });

  it("rejects malformed dates", () => {
    expect(() => dayIndex("2020/11/15")).toThrow();
  });
});

describe("view model geometry", () => {
  it("is a pure function of document and width", () => {
    const a = buildViewModel(doc, 960);
    const b = buildViewModel(JSON.parse(JSON.stringify(doc)), 960);
    expect(a).toEqual(b);
  });

  it("maps the window onto the plot area linearly", () => {
    const vm = buildViewModel(doc, 960);
    const first = vm.rows[0];
    // task1 starts at the window start: left edge of the plot
    expect(first.planned.x).toBeCloseTo(LAYOUT.labelGutter, 1);
    const plotWidth = 960 - LAYOUT.labelGutter - LAYOUT.rightPad;
    const expectedWidth = (13 / 46) * plotWidth;
    expect(first.planned.width).toBeCloseTo(expectedWidth, 1);
  });

  it("positions rows by document order", () => {
    const vm = buildViewModel(doc, 960);
    expect(vm.rows[1].y - vm.rows[0].y).toBe(LAYOUT.rowHeight);
  });

  it("derives the completed overlay from the completed interval", () => {
    const vm = buildViewModel(doc, 960);
    const second = vm.rows[1];
    expect(second.completed).not.toBeNull();
    const completed = second.completed!;
    expect(completed.x).toBeCloseTo(second.planned.x, 2);
    // two of six planned days are complete
    expect(completed.width / second.planned.width).toBeCloseTo(2 / 6, 1);
  });

  it("changes geometry with the viewport width only via the mapping", () => {
    const narrow = buildViewModel(doc, 600);
    const wide = buildViewModel(doc, 1200);
    expect(narrow.rows[0].planned.width).toBeLessThan(wide.rows[0].planned.width);
    expect(narrow.rows[0].y).toBe(wide.rows[0].y);
  });
});
