import { describe, expect, it } from "vitest";

import { ListController } from "../src/list.js";
import { FakeApi, fixtureReports, makeSchema } from "./fake-api.js";

function setup(pageSize?: number) {
  const schema = makeSchema(9);
  const api = new FakeApi(schema, fixtureReports(schema));
  return { api, controller: new ListController(api, pageSize) };
}

describe("ListController", () => {
  it("flagged-only shows exactly the flagged fixtures", async () => {
    const { controller } = setup();
    const state = await controller.toggleFlaggedOnly(true);
    expect(state.rows.map((r) => r.report_id).sort()).toEqual(["r0", "r1", "r2"]);
    expect(state.rows.every((r) => r.flagged)).toBe(true);
  });

  it("toggling back restores the full list", async () => {
    const { controller } = setup();
    await controller.toggleFlaggedOnly(true);
    const state = await controller.toggleFlaggedOnly(false);
    expect(state.total).toBe(6);
  });

  it("pages through results", async () => {
    const { controller } = setup(2);
    const first = await controller.load("all", 1);
    expect(first.pageCount).toBe(3);
    expect(first.rows).toHaveLength(2);
    const last = await controller.load(undefined, 3);
    expect(last.rows).toHaveLength(2);
    expect(last.page).toBe(3);
  });

  it("unannotated filter drops annotated reports", async () => {
    const { api, controller } = setup();
    await api.saveAnnotation("r4", { e1: "true" });
    const state = await controller.load("unannotated-only");
    expect(state.rows.map((r) => r.report_id)).not.toContain("r4");
    expect(state.total).toBe(5);
  });
});
