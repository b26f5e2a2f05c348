// HTML rendering of console state: pure string output, so the exact result
// can be asserted headlessly and bound to a real DOM by the browser shell.

import { STRINGS, t } from './i18n.js';
import type { Language, Meta, Profile, ProgressDay } from './types.js';
import type { ChatViewState, ConsoleViewState, ThreadState } from './viewstate.js';

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}

function bar(value: number, max: number): string {
  const width = max > 0 ? Math.round((Math.max(0, Math.min(value, max)) / max) * 100) : 0;
  return `<div class="bar"><div class="bar-fill" style="width:${width}%"></div></div>`;
}

function progressRows(days: ProgressDay[], language: Language): string {
  return days
    .map((entry) => {
      const temperature = entry.temperature ?? null;
      const stress = entry.stress_mean ?? null;
      return (
        `<tr class="progress-point" data-day="${entry.day}">` +
        `<td>${t(language, 'session.day')} ${entry.day}</td>` +
        `<td>${temperature === null ? '–' : `${temperature.toFixed(1)}°C`}${temperature === null ? '' : bar(temperature - 30, 15)}</td>` +
        `<td>${stress === null ? '–' : stress.toFixed(2)}${stress === null ? '' : bar(stress, 1)}</td>` +
        '</tr>'
      );
    })
    .join('');
}

export function renderSession(state: ConsoleViewState): string {
  const language = state.language;
  const transcript = state.transcript
    .map((entry) => {
      const who = entry.speaker === 'bot' ? t(language, 'session.bot') : t(language, 'session.you');
      return `<div class="turn turn-${entry.speaker}"><span class="who">${escapeHtml(who)}</span>` +
        `<span class="text">${escapeHtml(entry.text)}</span></div>`;
    })
    .join('');
  const days = state.progress?.days ?? [];
  const scores = state.liveScores;
  const scoresHtml = scores === null
    ? ''
    : `<dl class="live-scores">` +
      `<dt>${t(language, 'session.sentiment')}</dt><dd>${scores.sentimentSigned.toFixed(2)}</dd>` +
      `<dt>${t(language, 'session.emotion')}</dt><dd>${escapeHtml(scores.topEmotion)}</dd>` +
      `<dt>${t(language, 'session.stress')}</dt><dd>${scores.stress.toFixed(2)}</dd>` +
      '</dl>';
  const hotline = state.hotline === null
    ? ''
    : `<div class="hotline-banner">${t(language, 'hotline.title')}: ${escapeHtml(state.hotline)}</div>`;
  const activity = renderActivityPanel(state);
  return (
    `<div class="session-view">` +
    hotline +
    `<section class="conversation-pane"><h2>${t(language, 'session.conversation')}</h2>` +
    `<div class="transcript">${transcript}</div></section>` +
    `<aside class="side-panes">` +
    `<section class="progress-pane"><h2>${t(language, 'session.progress')}</h2>` +
    `<table>${progressRows(days, language)}</table></section>` +
    `<section class="status-pane"><h2>${t(language, 'session.day_indicator')}: ` +
    `${state.dayIndicator ?? '–'}</h2>${scoresHtml}</section>` +
    activity +
    `</aside></div>`
  );
}

export function renderActivityPanel(state: ConsoleViewState): string {
  const language = state.language;
  if (state.activityPanel.state === 'hidden') {
    return '';
  }
  const { kind, video } = state.activityPanel;
  const kindKey = `activity.kind.${kind}`;
  const label = kindKey in STRINGS ? t(language, kindKey as keyof typeof STRINGS) : kind;
  return (
    `<section class="activity-panel"><h2>${t(language, 'activity.title')}</h2>` +
    `<p>${t(language, 'activity.playing')}: ${escapeHtml(label)}</p>` +
    `<div class="video" data-video="${escapeHtml(video)}"></div>` +
    `<button class="continue-button">${t(language, 'activity.continue')}</button></section>`
  );
}

export function renderDashboard(profile: Profile, meta: Meta, language: Language): string {
  const prefsRows = Object.entries(profile.activity_preferences.per_day)
    .sort(([a], [b]) => Number(a) - Number(b))
    .map(([day, pref]) =>
      `<tr><td>${t(language, 'session.day')} ${day}</td>` +
      `<td>${escapeHtml(pref.kind)}</td><td>${escapeHtml(pref.video)}</td></tr>`)
    .join('');
  const interests = meta.topics
    .map((topic) => {
      const checked = profile.interests.includes(topic) ? ' checked' : '';
      return `<label><input type="checkbox" name="interest" value="${escapeHtml(topic)}"${checked}>` +
        `${escapeHtml(topic)}</label>`;
    })
    .join('');
  return (
    `<div class="dashboard-view">` +
    `<section><h2>${t(language, 'dashboard.profile')}</h2>` +
    `<p>${t(language, 'dashboard.alias')}: ${escapeHtml(profile.alias)}</p>` +
    `<p>${t(language, 'dashboard.language')}: ${profile.language}</p>` +
    `<p>${t(language, 'dashboard.program')}: ${escapeHtml(profile.program.name)} ` +
    `(${profile.program.length_days} ${t(language, 'dashboard.program_days')})</p></section>` +
    `<section><h2>${t(language, 'dashboard.activity_prefs')}</h2><table>${prefsRows}</table></section>` +
    `<section><h2>${t(language, 'dashboard.interests')}</h2>${interests}` +
    `<button class="save-interests">${t(language, 'dashboard.save')}</button></section>` +
    `</div>`
  );
}

export function renderThread(thread: ThreadState, language: Language): string {
  const isTopic = thread.conversation.startsWith('topic:');
  const messages = thread.messages
    .map((message) =>
      `<div class="message" data-id="${message.id}">` +
      `<span class="sender">${escapeHtml(message.sender)}</span>` +
      `<span class="body">${escapeHtml(message.body)}</span>` +
      `<button class="report-button" data-id="${message.id}">${t(language, 'chat.report')}</button>` +
      '</div>')
    .join('');
  const meeting = isTopic
    ? `<button class="join-meeting">${t(language, 'chat.join_meeting')}</button>`
    : '';
  return (
    `<div class="thread" data-conversation="${escapeHtml(thread.conversation)}">` +
    `<header>${escapeHtml(thread.conversation)}${meeting}</header>` +
    `<div class="messages">${messages}</div>` +
    `<input class="message-input" placeholder="${t(language, 'chat.message_placeholder')}">` +
    `<button class="send-message">${t(language, 'chat.send')}</button></div>`
  );
}

export function renderChat(chat: ChatViewState, language: Language): string {
  const contacts = chat.contacts
    .map((contact) => `<li>${escapeHtml(contact.alias)} (${escapeHtml(contact.user)})</li>`)
    .join('');
  const threads = Object.values(chat.threads)
    .map((thread) => renderThread(thread, language))
    .join('');
  return (
    `<div class="chat-view">` +
    `<section class="contacts"><h2>${t(language, 'chat.contacts')}</h2><ul>${contacts}</ul>` +
    `<input class="alias-input" placeholder="${t(language, 'chat.add_contact')}"></section>` +
    `<section class="threads"><h2>${t(language, 'chat.topics')}</h2>${threads}</section>` +
    `</div>`
  );
}
