// Every user-visible string is keyed here with both locales; nothing in the
// render layer is allowed to hard-code display text.

import type { Language } from './types.js';

export const STRINGS = {
  'app.title': { en: 'Nora Console', zh: '诺拉控制台' },
  'view.session': { en: 'Session', zh: '会谈' },
  'view.dashboard': { en: 'Dashboard', zh: '面板' },
  'view.chat': { en: 'Chat', zh: '聊天' },
  'session.conversation': { en: 'Conversation', zh: '对话' },
  'session.progress': { en: 'Progress across days', zh: '各天进展' },
  'session.day': { en: 'Day', zh: '天' },
  'session.day_indicator': { en: 'Session day', zh: '会谈天数' },
  'session.scores': { en: 'Empathetic scores', zh: '共情分数' },
  'session.sentiment': { en: 'Sentiment', zh: '情感' },
  'session.emotion': { en: 'Emotion', zh: '情绪' },
  'session.stress': { en: 'Stress', zh: '压力' },
  'session.temperature': { en: 'Temperature', zh: '体温' },
  'session.no_session': { en: 'No session yet. Start your daily session!', zh: '还没有会谈。开始今天的会谈吧！' },
  'session.start': { en: 'Start session', zh: '开始会谈' },
  'session.input_placeholder': { en: 'Type your answer…', zh: '输入你的回答……' },
  'session.send': { en: 'Send', zh: '发送' },
  'session.speak': { en: 'Speak', zh: '说话' },
  'session.you': { en: 'You', zh: '你' },
  'session.bot': { en: 'Nora', zh: '诺拉' },
  'activity.title': { en: 'Activity', zh: '活动' },
  'activity.continue': { en: 'Continue', zh: '继续' },
  'activity.playing': { en: 'Now playing', zh: '正在播放' },
  'hotline.title': { en: 'Please consult a doctor', zh: '请咨询医生' },
  'dashboard.profile': { en: 'Profile', zh: '个人资料' },
  'dashboard.alias': { en: 'Alias', zh: '昵称' },
  'dashboard.language': { en: 'Language', zh: '语言' },
  'dashboard.program': { en: 'Quarantine program', zh: '隔离计划' },
  'dashboard.program_days': { en: 'days', zh: '天' },
  'dashboard.activity_prefs': { en: 'Activity videos per day', zh: '每日活动视频' },
  'dashboard.interests': { en: 'Interests', zh: '兴趣' },
  'dashboard.save': { en: 'Save', zh: '保存' },
  'activity.kind.exercise': { en: 'exercise', zh: '运动' },
  'activity.kind.yoga': { en: 'yoga', zh: '瑜伽' },
  'activity.kind.meditation': { en: 'meditation', zh: '冥想' },
  'chat.contacts': { en: 'Contacts', zh: '联系人' },
  'chat.add_contact': { en: 'Add friend by alias', zh: '按昵称添加好友' },
  'chat.topics': { en: 'Topic threads', zh: '话题讨论区' },
  'chat.direct': { en: 'Direct messages', zh: '私聊' },
  'chat.send': { en: 'Send', zh: '发送' },
  'chat.report': { en: 'Report', zh: '举报' },
  'chat.join_meeting': { en: 'Join group call', zh: '加入群组通话' },
  'chat.message_placeholder': { en: 'Write a message…', zh: '写一条消息……' },
  'error.generic': { en: 'Something went wrong', zh: '出错了' },
} as const;

export type StringKey = keyof typeof STRINGS;

export function t(language: Language, key: StringKey): string {
  return STRINGS[key][language];
}
