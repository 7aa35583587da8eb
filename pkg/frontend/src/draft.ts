/** Client-side request-message validation. The service re-validates the
 * rendered form; these checks catch the obvious mistakes before any send. */

export const PLACEHOLDER = "{user}";
export const MESSAGE_LIMIT = 280;

export type DraftCheck = { ok: true } | { ok: false; reason: string };

export function validateDraft(draft: string): DraftCheck {
  if (!draft.trim()) {
    return { ok: false, reason: "message is empty" };
  }
  if (!draft.includes(PLACEHOLDER)) {
    return { ok: false, reason: `message must contain ${PLACEHOLDER}` };
  }
  if (draft.length > MESSAGE_LIMIT) {
    return { ok: false, reason: `message exceeds ${MESSAGE_LIMIT} characters` };
  }
  return { ok: true };
}
