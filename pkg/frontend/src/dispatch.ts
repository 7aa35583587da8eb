/** Sequential batch dispatch with per-user outcomes.
 *
 * One POST per selected user, in selection order; a failure (for example
 * AlreadyDispatched) is recorded inline and the rest of the batch proceeds.
 */

import { ApiClient, ServiceError } from "./api.ts";
import { validateDraft } from "./draft.ts";

export interface DispatchOutcome {
  userId: string;
  ok: boolean;
  error?: string;
  errorCode?: string;
}

export async function dispatchSelection(
  api: ApiClient,
  campaignId: string,
  userIds: string[],
  draft: string,
): Promise<DispatchOutcome[]> {
  const check = validateDraft(draft);
  if (!check.ok) {
    throw new Error(`invalid draft: ${check.reason}`);
  }
  const outcomes: DispatchOutcome[] = [];
  for (const userId of userIds) {
    try {
      await api.dispatch(campaignId, userId, draft);
      outcomes.push({ userId, ok: true });
    } catch (err) {
      if (err instanceof ServiceError) {
        outcomes.push({ userId, ok: false, error: err.message, errorCode: err.code });
      } else {
        outcomes.push({ userId, ok: false, error: String(err) });
      }
    }
  }
  return outcomes;
}
