import { describe, expect, it } from "vitest";

import { validateDraft } from "../src/draft.ts";

describe("validateDraft", () => {
  it("accepts a normal draft", () => {
    expect(validateDraft("{user} please share this").ok).toBe(true);
  });

  it("blocks a draft without the placeholder", () => {
    const check = validateDraft("please share this");
    expect(check.ok).toBe(false);
    if (!check.ok) expect(check.reason).toContain("{user}");
  });

  it("blocks an empty draft", () => {
    expect(validateDraft("   ").ok).toBe(false);
  });

  it("blocks drafts over 280 characters", () => {
    const check = validateDraft("{user} " + "x".repeat(280));
    expect(check.ok).toBe(false);
    if (!check.ok) expect(check.reason).toContain("280");
  });
});
