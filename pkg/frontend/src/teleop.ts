// Deadman teleoperation: while a direction control is held, the command is
// renewed faster than the server-side 500 ms deadman; releasing posts one
// explicit zero and stops renewing, so the robot halts even if the browser
// keeps its connection open.

export interface TeleopSender {
  (v: number, omega: number): Promise<unknown>;
}

export const RENEW_MS = 250;

export class DeadmanTeleop {
  private timer: ReturnType<typeof setInterval> | null = null;
  private v = 0;
  private omega = 0;
  public enabled = true;

  constructor(private send: TeleopSender) {}

  get active(): boolean {
    return this.timer !== null;
  }

  hold(v: number, omega: number): void {
    if (!this.enabled) return;
    this.v = v;
    this.omega = omega;
    void this.send(v, omega).catch(() => this.release());
    if (this.timer === null) {
      this.timer = setInterval(() => {
        void this.send(this.v, this.omega).catch(() => this.release());
      }, RENEW_MS);
    }
  }

  release(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.v = 0;
    this.omega = 0;
    // explicit zero; after this no renewals happen and the deadman lapses
    void this.send(0, 0).catch(() => undefined);
  }

  disable(): void {
    this.enabled = false;
    if (this.timer !== null) this.release();
  }

  enable(): void {
    this.enabled = true;
  }
}
