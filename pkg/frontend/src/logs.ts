// Incremental log pager for the infinite-scroll panel: keeps the server-side
// byte offset and appends pages as the user scrolls.

import type { ApiClient } from "./api";

export class LogPager {
  rows: Record<string, unknown>[] = [];
  private offset = 0;
  loading = false;

  constructor(private api: ApiClient, private pageSize = 200) {}

  async loadMore(): Promise<number> {
    if (this.loading) return 0;
    this.loading = true;
    try {
      const page = await this.api.logs(this.offset, this.pageSize);
      this.rows.push(...page.entries);
      const got = page.entries.length;
      this.offset = page.next;
      return got;
    } finally {
      this.loading = false;
    }
  }
}
