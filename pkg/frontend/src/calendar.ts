// Calendar panel view model: optimistic CRUD with server reconciliation.

import type { ApiClient } from "./api";
import type { CalendarEntry } from "./types";

export class CalendarModel {
  entries: CalendarEntry[] = [];
  error: string | null = null;

  constructor(private api: ApiClient) {}

  async refresh(): Promise<void> {
    this.entries = await this.api.calendar();
  }

  async upsert(entry: CalendarEntry): Promise<boolean> {
    const before = [...this.entries];
    const idx = this.entries.findIndex((e) => e.entry_id === entry.entry_id);
    if (idx >= 0) this.entries[idx] = entry;
    else this.entries.push(entry);
    try {
      await this.api.upsertCalendar(entry);
      this.error = null;
      await this.refresh();
      return true;
    } catch (e) {
      this.entries = before; // reconcile: server refused, roll back
      this.error = e instanceof Error ? e.message : String(e);
      return false;
    }
  }

  async remove(entryId: string): Promise<boolean> {
    const before = [...this.entries];
    this.entries = this.entries.filter((e) => e.entry_id !== entryId);
    try {
      await this.api.deleteCalendar(entryId);
      this.error = null;
      return true;
    } catch (e) {
      this.entries = before;
      this.error = e instanceof Error ? e.message : String(e);
      return false;
    }
  }
}

export function parseEntryForm(fields: {
  entry_id: string;
  action: string;
  when: string; // "daily HH:MM" or "once <seconds>"
}): CalendarEntry {
  const base: CalendarEntry = {
    entry_id: fields.entry_id.trim(),
    action: fields.action.trim(),
    once_at: null,
    daily_hhmm: null,
    weekdays: null,
    enabled: true,
    expiry_s: null,
  };
  if (!base.entry_id) throw new Error("entry id required");
  if (!base.action) throw new Error("action required");
  const when = fields.when.trim();
  const daily = when.match(/^daily\s+(\d{2}:\d{2})$/);
  const once = when.match(/^once\s+([\d.]+)$/);
  if (daily) base.daily_hhmm = daily[1];
  else if (once) base.once_at = parseFloat(once[1]);
  else throw new Error('schedule must be "daily HH:MM" or "once <sim-seconds>"');
  return base;
}
