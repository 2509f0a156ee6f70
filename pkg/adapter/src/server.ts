import {
  errorMessage,
  Message,
  ModelModule,
  PROTOCOL_VERSION,
  TrainedModel,
  validateFrame,
  WireFrame,
} from "./protocol.js";

export type AdapterState = "launched" | "ready" | "trained";

/**
 * One request/reply state machine. Replies are produced in receipt order;
 * a malformed line yields an error reply but never changes state, and only
 * JSON ever reaches the output sink.
 */
export class AdapterServer {
  state: AdapterState = "launched";
  private trained: TrainedModel | null = null;

  constructor(
    private readonly model: ModelModule,
    private readonly emit: (msg: Message) => void,
    private readonly onShutdown: () => void,
  ) {}

  handleLine(line: string): void {
    const text = line.trim();
    if (text === "") {
      return;
    }
    let msg: unknown;
    try {
      msg = JSON.parse(text);
    } catch {
      this.emit(errorMessage("bad_request", "line is not JSON"));
      return;
    }
    if (typeof msg !== "object" || msg === null || typeof (msg as Message).type !== "string") {
      this.emit(errorMessage("bad_request", "message lacks a type field"));
      return;
    }
    this.dispatch(msg as Message);
  }

  private dispatch(msg: Message): void {
    switch (msg.type) {
      case "hello":
        this.onHello(msg);
        return;
      case "train":
        this.onTrain(msg);
        return;
      case "predict":
        this.onPredict(msg);
        return;
      case "shutdown":
        this.onShutdown();
        return;
      default:
        this.emit(errorMessage("bad_request", `unknown message type '${msg.type}'`));
    }
  }

  private onHello(msg: Message): void {
    if (msg.protocol_version !== PROTOCOL_VERSION) {
      this.emit(
        errorMessage(
          "version_mismatch",
          `adapter speaks protocol ${PROTOCOL_VERSION}, harness sent ${String(msg.protocol_version)}`,
        ),
      );
      return;
    }
    this.state = "ready";
    this.emit({
      type: "hello",
      protocol_version: PROTOCOL_VERSION,
      model_name: this.model.name,
      capabilities: { forces: "zero", deterministic: true },
    });
  }

  private onTrain(msg: Message): void {
    if (this.state === "launched") {
      this.emit(errorMessage("bad_state", "train before hello"));
      return;
    }
    try {
      const rawFrames = msg.train_frames;
      if (!Array.isArray(rawFrames) || rawFrames.length === 0) {
        throw new Error("train_frames must be a nonempty array");
      }
      const frames: WireFrame[] = rawFrames.map((f, i) => validateFrame(f, `train frame ${i}`));
      const config = (msg.config ?? {}) as Record<string, unknown>;
      this.emit({ type: "train_progress", message: `fitting on ${frames.length} frames` });
      this.trained = this.model.fit(frames, config);
      this.state = "trained";
      this.emit({ type: "train_done", fit_report: { sample_count: frames.length } });
    } catch (err) {
      this.emit(errorMessage("train_failed", String(err)));
    }
  }

  private onPredict(msg: Message): void {
    const requestId = typeof msg.request_id === "string" ? msg.request_id : "";
    if (this.trained === null) {
      this.emit(errorMessage("not_trained", "predict before train"));
      return;
    }
    try {
      const rawFrames = msg.frames;
      if (!Array.isArray(rawFrames) || rawFrames.length === 0) {
        throw new Error("frames must be a nonempty array");
      }
      const frames = rawFrames.map((f, i) => validateFrame(f, `predict frame ${i}`));
      const { energies, forces } = this.trained.predict(frames);
      this.emit({ type: "prediction", request_id: requestId, energies, forces });
    } catch (err) {
      this.emit(errorMessage("predict_failed", String(err)));
    }
  }
}
