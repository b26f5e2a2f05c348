// Pure console state: built either incrementally from live turn results or
// in one shot from gateway reads after a reload. Both constructions must
// produce identical states — the UI itself holds nothing authoritative.

import type {
  ChatMessage,
  ChatNotification,
  Contact,
  EmpathyScores,
  Language,
  Progress,
  SessionView,
  StartResult,
  SyncResult,
  TurnResult,
} from './types.js';

export type ActiveView = 'session' | 'dashboard' | 'chat';

export interface TranscriptEntry {
  speaker: 'user' | 'bot';
  text: string;
  scores: EmpathyScores | null;
}

export interface LiveScores {
  sentimentSigned: number; // confidence, negated for a negative label
  topEmotion: string;
  stress: number;
}

export type ActivityPanel =
  | { state: 'hidden' }
  | { state: 'playing'; kind: string; video: string }
  | { state: 'awaiting-continue'; kind: string; video: string };

export interface ConsoleViewState {
  activeView: ActiveView;
  language: Language;
  dayIndicator: number | null;
  phase: string | null;
  transcript: TranscriptEntry[];
  liveScores: LiveScores | null;
  activityPanel: ActivityPanel;
  hotline: string | null;
  progress: Progress | null;
  sessionOpen: boolean;
}

export function emptyConsoleState(language: Language = 'en'): ConsoleViewState {
  return {
    activeView: 'session',
    language,
    dayIndicator: null,
    phase: null,
    transcript: [],
    liveScores: null,
    activityPanel: { state: 'hidden' },
    hotline: null,
    progress: null,
    sessionOpen: false,
  };
}

export function liveScoresFrom(scores: EmpathyScores): LiveScores {
  const entries = Object.entries(scores.emotion);
  let topEmotion = entries.length > 0 ? entries[0]![0] : '';
  let best = -Infinity;
  for (const [emotion, value] of entries) {
    if (value > best) {
      best = value;
      topEmotion = emotion;
    }
  }
  const sign = scores.sentiment.label === 'negative' ? -1 : 1;
  return {
    sentimentSigned: sign * scores.sentiment.confidence,
    topEmotion,
    stress: scores.stress,
  };
}

// ------------------------------------------------------- live (incremental)

export function applySessionStart(state: ConsoleViewState, start: StartResult): ConsoleViewState {
  return {
    ...state,
    sessionOpen: true,
    dayIndicator: start.session.day,
    phase: start.session.phase,
    transcript: [{ speaker: 'bot', text: start.response.text, scores: null }],
    liveScores: null,
    activityPanel: { state: 'hidden' },
    hotline: null,
  };
}

export function applyTurn(state: ConsoleViewState, userText: string, turn: TurnResult): ConsoleViewState {
  const transcript: TranscriptEntry[] = [
    ...state.transcript,
    { speaker: 'user', text: userText, scores: turn.scores },
    { speaker: 'bot', text: turn.response.text, scores: null },
  ];
  let activityPanel: ActivityPanel = state.activityPanel;
  if (turn.response.directive === 'show_activity') {
    const args = turn.response.directive_args as { kind?: string; video?: string };
    activityPanel = { state: 'playing', kind: args.kind ?? '', video: args.video ?? '' };
  }
  if (turn.session.phase !== 'activity_running') {
    activityPanel = { state: 'hidden' }; // panel is tied to the running phase
  }
  let hotline = state.hotline;
  if (turn.response.directive === 'show_hotline') {
    hotline = String((turn.response.directive_args as { hotline?: string }).hotline ?? '');
  }
  return {
    ...state,
    transcript,
    phase: turn.session.phase,
    dayIndicator: turn.session.day,
    liveScores: liveScoresFrom(turn.scores),
    activityPanel,
    hotline,
    sessionOpen: turn.session.phase !== 'end',
  };
}

export function applyProgress(state: ConsoleViewState, progress: Progress): ConsoleViewState {
  return { ...state, progress };
}

// -------------------------------------------------------- reload (one shot)

export function rebuildSessionView(
  read: { open: boolean; session: SessionView | null },
  progress: Progress,
  language: Language,
): ConsoleViewState {
  const base = emptyConsoleState(language);
  if (read.session === null) {
    return { ...base, progress };
  }
  const view = read.session;
  const transcript: TranscriptEntry[] = view.turns.map((turn) => ({
    speaker: turn.speaker,
    text: turn.text,
    scores: turn.scores,
  }));
  let liveScores: LiveScores | null = null;
  for (let i = transcript.length - 1; i >= 0; i -= 1) {
    const scores = transcript[i]!.scores;
    if (scores !== null) {
      liveScores = liveScoresFrom(scores);
      break;
    }
  }
  const activityPanel: ActivityPanel =
    view.phase === 'activity_running' && view.activity !== null
      ? { state: 'playing', kind: view.activity.kind, video: view.activity.video }
      : { state: 'hidden' };
  return {
    ...base,
    sessionOpen: read.open && view.phase !== 'end',
    dayIndicator: view.day,
    phase: view.phase,
    transcript,
    liveScores,
    activityPanel,
    hotline: view.hotline,
    progress,
  };
}

// ------------------------------------------------------------------- chat

export interface ThreadState {
  conversation: string;
  messages: ChatMessage[];
  cursor: number;
}

export function emptyThread(conversation: string): ThreadState {
  return { conversation, messages: [], cursor: 0 };
}

/** Append a sync result; exactly-once by cursor, order by id. */
export function applySync(thread: ThreadState, result: SyncResult): ThreadState {
  const fresh = result.messages.filter((message) => message.id > thread.cursor);
  return {
    conversation: thread.conversation,
    messages: [...thread.messages, ...fresh],
    cursor: result.cursor.last_seen > thread.cursor ? result.cursor.last_seen : thread.cursor,
  };
}

/** A notification is actionable when it references something newer. */
export function notificationNeedsSync(thread: ThreadState, notification: ChatNotification): boolean {
  return notification.conversation === thread.conversation && notification.hint > thread.cursor;
}

export interface ChatViewState {
  contacts: Contact[];
  interests: string[];
  threads: Record<string, ThreadState>;
}

export function emptyChatView(): ChatViewState {
  return { contacts: [], interests: [], threads: {} };
}
