"""The signforge command line: pipeline stages behind one executable.

Every run writes a manifest beside its outputs (resolved config, seeds,
input digests, tool version) so any artifact can be regenerated from the
manifest alone. Module errors exit 1 with a JSON record on stderr; config
validation problems exit 2.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
from dataclasses import dataclass, asdict, fields

import numpy as np

from . import __version__
from . import corpusio, ingest, langgloss, lift3d, metrics, prompts, report, signmodel, skeleton, storage, synth, training

MANIFEST_NAME = "manifest.json"


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Run-level tunables; defaults follow the validated defaults table."""

    vocab_size: int = 16000
    case_sensitive: bool = True
    batch_size: int = 16
    lr: float = 1e-3
    gloss_lr: float | None = None  # token-stage rate; cross-entropy wants ~lr/10
    lr_decay: float = 0.0
    lr_floor: float = 1e-4
    loss_mode: str = "MSE"  # MSE or RL
    max_sent_length: int = 300
    plc_enabled: bool = False
    eta: float = 1.0
    new_sample_priority: str = "max_seen"
    input_noise: float = 0.0
    hold_final: int = 1
    dropout: float = 0.0
    layers: int = 4
    embed_dim: int = 1024
    ffn_dim: int = 4096
    heads: int = 8
    epochs: int = 100
    eval_every: int = 10
    target_dtw: float | None = None
    seed: int = 0
    size_class: str | None = None

    def __post_init__(self):
        if self.loss_mode not in ("MSE", "RL"):
            raise ConfigError(f"loss_mode must be MSE or RL, got {self.loss_mode!r}")
        if self.ffn_dim != 4 * self.embed_dim:
            raise ConfigError(f"ffn_dim must equal 4*hidden size: got ffn {self.ffn_dim} with embed {self.embed_dim}")
        if self.size_class is not None and self.size_class not in signmodel.SIZE_CLASSES:
            raise ConfigError(f"unknown size_class {self.size_class!r}")
        if self.dropout < 0 or self.dropout >= 1:
            raise ConfigError("dropout must be in [0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**raw)

    def model_config(self) -> signmodel.ModelConfig:
        if self.size_class is not None:
            return signmodel.ModelConfig.for_size(
                self.size_class,
                layers=2 if self.size_class in signmodel.SIZE_CLASSES else self.layers,
                max_sent_length=self.max_sent_length,
                dropout=self.dropout,
            )
        try:
            return signmodel.ModelConfig(
                embed_dim=self.embed_dim,
                hidden_dim=self.embed_dim,
                ffn_dim=self.ffn_dim,
                layers=self.layers,
                heads=self.heads,
                max_sent_length=self.max_sent_length,
                dropout=self.dropout,
            )
        except signmodel.BadConfig as exc:
            raise ConfigError(str(exc)) from exc

    def rl_config(self, stage: str = "pose") -> training.RLConfig:
        lr = self.lr
        if stage == "gloss":
            lr = self.gloss_lr if self.gloss_lr is not None else self.lr / 10.0
        return training.RLConfig(
            eta=self.eta,
            lr=lr,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            plc_enabled=self.plc_enabled,
            new_sample_priority=self.new_sample_priority,
            lr_decay=self.lr_decay,
            lr_floor=self.lr_floor,
            input_noise=self.input_noise if stage == "pose" else 0.0,
            hold_final=self.hold_final if stage == "pose" else 0,
            eval_every=self.eval_every,
            target_dtw=self.target_dtw,
        )


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(outdir, command: str, config: dict, seed: int, jobs: int, inputs, outputs) -> str:
    manifest = {
        "tool": "signforge",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": seed,
        "jobs": jobs,
        "inputs": {str(p): _sha256_file(p) for p in inputs},
        "outputs": sorted(str(o) for o in outputs),
    }
    path = os.path.join(outdir, MANIFEST_NAME)
    os.makedirs(outdir, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path


def _parallel_map(fn, items, jobs: int):
    """Order-preserving map; results never depend on the worker count."""
    if jobs <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _format_matrix(rows) -> str:
    out = []
    for row in np.atleast_2d(np.asarray(rows)):
        out.append(" ".join(str(np.float32(v)) for v in row))
    return "\n".join(out) + "\n"


def _parse_matrix(text) -> np.ndarray:
    rows = [np.array(line.split(), dtype=np.float32) for line in text.splitlines() if line.strip()]
    return np.stack(rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        languages=tuple(args.languages.split(",")),
        vocab_per_language=args.vocab_per_language,
        clips=args.clips,
        frames_per_clip=tuple(int(x) for x in args.frames.split(",")),
        motif_amplitude=args.amplitude,
        seed=args.seed,
    )
    corpus = synth.generate(spec)
    paths = synth.write_corpus(corpus, args.out)
    write_manifest(
        args.out, "synth",
        {"languages": list(spec.languages), "vocab_per_language": spec.vocab_per_language,
         "clips": spec.clips, "frames_per_clip": list(spec.frames_per_clip),
         "motif_amplitude": spec.motif_amplitude, "seed": spec.seed},
        args.seed, args.jobs, [], paths.values(),
    )
    print(json.dumps({"written": sorted(os.path.basename(p) for p in paths.values())}))
    return 0


def cmd_ingest(args) -> int:
    policy = ingest.CleanPolicy(mode=args.policy, invalid_frame_threshold=args.threshold)
    clip_dirs = sorted(
        d for d in os.listdir(args.indir) if os.path.isdir(os.path.join(args.indir, d))
    )
    if not clip_dirs:
        raise ingest.EmptyClip(f"no clip directories under {args.indir}")

    def process(name):
        frame_files = sorted(
            f for f in os.listdir(os.path.join(args.indir, name)) if f.endswith(".json")
        )
        documents = []
        for f in frame_files:
            with open(os.path.join(args.indir, name, f), "rb") as fh:
                documents.append(fh.read())
        clip = ingest.assemble_clip(documents, clip_id=name)
        cleaned, clean_report = ingest.clean_clip(clip, policy)
        return name, ingest.clip_to_flat(cleaned), clean_report

    results = _parallel_map(process, clip_dirs, args.jobs)
    archive = storage.write_archive([(name, flat) for name, flat, _ in results])
    with open(args.out, "wb") as fh:
        fh.write(archive)
    report_path = str(args.out) + ".clean.tsv"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write("id\tframes_in\tframes_dropped\tvalues_replaced\treplacement_fraction\n")
        for name, _, rep in results:
            fh.write(f"{name}\t{rep.frames_in}\t{rep.frames_dropped}\t{rep.values_replaced}\t{rep.replacement_fraction:.6f}\n")
    outdir = os.path.dirname(os.path.abspath(args.out)) or "."
    write_manifest(outdir, "ingest", {"policy": args.policy, "threshold": args.threshold},
                   args.seed, args.jobs, [], [args.out, report_path])
    print(json.dumps({"clips": len(results), "archive": str(args.out)}))
    return 0


def cmd_lift(args) -> int:
    with open(args.indir if os.path.isfile(args.indir) else args.indir, "rb") as fh:
        clips = storage.read_archive(fh.read())
    params = lift3d.LiftParams(percentile=args.percentile, noise_sigma=args.sigma, rng_seed=args.seed)
    structure = skeleton.standard_structure()

    def process(entry):
        key, flat = entry
        clip = ingest.clip_from_flat(key, flat)
        return key, lift3d.lift_clip(clip, structure, params)

    results = _parallel_map(process, clips, args.jobs)
    outputs = []
    for key, res in results:
        clip_dir = os.path.join(args.out, key)
        os.makedirs(clip_dir, exist_ok=True)
        # Five files per clip: four intermediates plus the final pose.
        angles = np.concatenate([res.angles_x, res.angles_y, res.angles_z], axis=1)
        roots = np.stack([res.roots_x, res.roots_y, res.roots_z], axis=1)
        named = [
            ("1_lines.txt", res.lines),
            ("2_roots.txt", roots),
            ("3_lengths.txt", res.lengths_2d),
            ("4_angles.txt", angles),
            ("5_pose.txt", res.pose.flat_frames()),
        ]
        for fname, value in named:
            path = os.path.join(clip_dir, fname)
            _write_text(path, _format_matrix(value))
            outputs.append(path)
    write_manifest(args.out, "lift",
                   {"percentile": args.percentile, "sigma": args.sigma},
                   args.seed, args.jobs, [args.indir], outputs)
    print(json.dumps({"clips": len(results), "out": str(args.out)}))
    return 0


def cmd_pack(args) -> int:
    clip_dirs = sorted(
        d for d in os.listdir(args.indir) if os.path.isdir(os.path.join(args.indir, d))
    )
    clips = []
    for name in clip_dirs:
        pose_path = os.path.join(args.indir, name, "5_pose.txt")
        with open(pose_path, "r", encoding="utf-8") as fh:
            clips.append((name, _parse_matrix(fh.read())))
    text, ids = storage.pack_skels(clips)
    _write_text(args.out, text)
    ids_path = str(args.out) + ".ids"
    _write_text(ids_path, "\n".join(ids) + "\n")
    outdir = os.path.dirname(os.path.abspath(args.out)) or "."
    write_manifest(outdir, "pack", {}, args.seed, args.jobs, [], [args.out, ids_path])
    print(json.dumps({"clips": len(ids), "skels": str(args.out)}))
    return 0


def cmd_prompts(args) -> int:
    bank = prompts.load_bank(args.bank)
    corpus_rows = []
    with open(args.corpus, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise prompts.PromptError(f"{args.corpus}: expected 'id<TAB>language<TAB>transcript'")
            corpus_rows.append((parts[0], parts[2], parts[1]))
    paired = prompts.augment(corpus_rows, bank, args.k, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for item_id, prompt in paired:
            fh.write(f"{item_id}\t{prompt}\n")
    outdir = os.path.dirname(os.path.abspath(args.out)) or "."
    write_manifest(outdir, "prompts", {"k": args.k}, args.seed, args.jobs,
                   [args.bank, args.corpus], [args.out])
    print(json.dumps({"prompts": len(paired)}))
    return 0


def cmd_vocab(args) -> int:
    streams = []
    with open(args.indir, "r", encoding="utf-8") as fh:
        first = fh.readline()
        rest = fh.read().splitlines()
    if args.tsv_column:
        header = first.rstrip("\n").split("\t")
        if args.tsv_column not in header:
            raise ConfigError(f"column {args.tsv_column!r} not in {header}")
        col = header.index(args.tsv_column)
        for line in rest:
            if line.strip():
                streams.append(line.split("\t")[col].split())
    else:
        for line in [first] + rest:
            if line.strip():
                streams.append(line.split())
    vocab = langgloss.build_vocab(streams, args.size, args.case_sensitive)
    vocab.save(args.out)
    outdir = os.path.dirname(os.path.abspath(args.out)) or "."
    write_manifest(outdir, "vocab", {"size": args.size, "case_sensitive": args.case_sensitive},
                   args.seed, args.jobs, [args.indir], [args.out])
    print(json.dumps({"vocab_size": len(vocab)}))
    return 0


def _dev_eval_fn(corpus, rows, vocab, dev_count=8, cap=64):
    """Mean rollout DTW against references on a fixed dev subset."""
    dev_rows = rows[:dev_count]

    def run(pair):
        values = []
        for r in dev_rows:
            ids, _ = langgloss.encode(r.transcript_tokens, vocab)
            pose = signmodel.rollout_pose(pair, np.array(ids), max_frames=cap)
            values.append(metrics.dtw(pose, corpus.poses[r.id]))
        return float(np.mean(values))

    return run


def cmd_train(args) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None and args.seed != 0:
        config.seed = args.seed
    corpus = corpusio.load_corpus(args.data)
    model_config = config.model_config()
    rl = config.rl_config()
    os.makedirs(args.out, exist_ok=True)
    langs = args.langs.split(",") if args.langs else corpus.languages()
    logs = {}
    outputs = []

    if args.mode == "mlsf":
        registry = signmodel.LanguageRegistry()
        manifest_map = {}
        for lang in langs:
            vocab, dataset, rows = corpusio.text_to_pose_dataset(
                corpus, lang, max_vocab=config.vocab_size, case_sensitive=config.case_sensitive
            )
            pair = signmodel.build(model_config, vocab, "pose", seed=config.seed)
            registry.register(lang, pair)
            dev = _dev_eval_fn(corpus, rows, vocab)
            logs[lang] = training.train(pair, dataset, rl, dev_eval=dev)
            pair_dir = os.path.join(args.out, lang)
            signmodel.save_pair(pair, pair_dir)
            manifest_map[lang] = lang
            outputs.append(pair_dir)
        with open(os.path.join(args.out, "languages.json"), "w", encoding="utf-8") as fh:
            json.dump({"mode": "mlsf", "languages": manifest_map}, fh, sort_keys=True, indent=1)
            fh.write("\n")
    else:
        prompt_vocab, gloss_vocab, stage1, targets = corpusio.prompt_to_langgloss_dataset(
            corpus, max_vocab=config.vocab_size, case_sensitive=config.case_sensitive
        )
        gloss_pair = signmodel.build(model_config, prompt_vocab, "tokens",
                                     tgt_vocab=gloss_vocab, seed=config.seed)
        logs["gloss_stage"] = training.train(gloss_pair, stage1, config.rl_config("gloss"))
        stage2_vocab, stage2, _ = corpusio.langgloss_to_pose_dataset(
            corpus, gloss_vocab=gloss_vocab, max_vocab=config.vocab_size,
            case_sensitive=config.case_sensitive,
        )
        pose_pair = signmodel.build(model_config, stage2_vocab, "pose", seed=config.seed)

        def dev(pair):
            values = []
            for r in corpus.rows[:8]:
                ids, _ = langgloss.encode(targets[r.id], stage2_vocab)
                pose = signmodel.rollout_pose(pair, np.array(ids), max_frames=64)
                values.append(metrics.dtw(pose, corpus.poses[r.id]))
            return float(np.mean(values))

        logs["pose_stage"] = training.train(pose_pair, stage2, rl, dev_eval=dev)
        signmodel.save_pair(gloss_pair, os.path.join(args.out, "p2lg_gloss"))
        signmodel.save_pair(pose_pair, os.path.join(args.out, "p2lg_pose"))
        with open(os.path.join(args.out, "languages.json"), "w", encoding="utf-8") as fh:
            json.dump({"mode": "p2lg", "languages": sorted(corpus.languages())}, fh, sort_keys=True, indent=1)
            fh.write("\n")
        outputs += [os.path.join(args.out, "p2lg_gloss"), os.path.join(args.out, "p2lg_pose")]

    paths = report.write_training_report(logs, args.out)
    outputs += list(paths.values())
    write_manifest(args.out, "train",
                   {"mode": args.mode, "langs": langs, "run": asdict(config)},
                   config.seed, args.jobs, [args.data, str(args.data) + ".ids"], outputs)
    print(json.dumps({"mode": args.mode, "channels": sorted(logs),
                      "epochs": {k: v.epochs_run for k, v in sorted(logs.items())}}))
    return 0


def _load_mlsf(ckpt_dir):
    with open(os.path.join(ckpt_dir, "languages.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    registry = signmodel.LanguageRegistry()
    for lang in meta["languages"]:
        registry.register(lang, signmodel.load_pair(os.path.join(ckpt_dir, lang)))
    return registry


def _load_p2lg(ckpt_dir):
    gloss_pair = signmodel.load_pair(os.path.join(ckpt_dir, "p2lg_gloss"))
    pose_pair = signmodel.load_pair(os.path.join(ckpt_dir, "p2lg_pose"))
    with open(os.path.join(ckpt_dir, "languages.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    return signmodel.P2LGModel(gloss_pair, pose_pair, languages=frozenset(meta["languages"]))


def cmd_generate(args) -> int:
    if args.mode == "mlsf":
        if not args.text:
            raise ConfigError("--text is required in mlsf mode")
        registry = _load_mlsf(args.ckpt)
        pair = registry.get(args.lang)
        tokens = args.text.split() if pair.src_vocab.case_sensitive else args.text.lower().split()
        ids, _ = langgloss.encode(tokens, pair.src_vocab)
        pose = signmodel.generate_pose(registry, args.lang, np.array(ids))
        extra = {}
    else:
        if not args.prompt:
            raise ConfigError("--prompt is required in p2lg mode")
        model = _load_p2lg(args.ckpt)
        tokens = args.prompt.split() if model.gloss_stage.src_vocab.case_sensitive else args.prompt.lower().split()
        ids, _ = langgloss.encode(tokens, model.gloss_stage.src_vocab)
        result = signmodel.generate_prompt2langgloss(model, np.array(ids), expected_language=args.lang)
        pose = result.pose
        extra = {
            "gloss": result.gloss_tokens,
            "violations": [
                {"index": v.index, "token": v.token, "found": v.found_language}
                for v in result.violations
            ],
        }
    text, ids_out = storage.pack_skels([("generated-0000", pose)])
    _write_text(args.out, text)
    _write_text(str(args.out) + ".ids", "\n".join(ids_out) + "\n")
    if extra:
        with open(str(args.out) + ".gloss.json", "w", encoding="utf-8") as fh:
            json.dump(extra, fh, sort_keys=True, indent=1)
            fh.write("\n")
    outdir = os.path.dirname(os.path.abspath(args.out)) or "."
    write_manifest(outdir, "generate",
                   {"mode": args.mode, "lang": args.lang, "text": args.text, "prompt": args.prompt},
                   args.seed, args.jobs, [], [args.out])
    print(json.dumps({"frames": int(pose.shape[0]), **({k: v for k, v in extra.items() if k == "violations"})}))
    return 0


def cmd_evaluate(args) -> int:
    corpus = corpusio.load_corpus(args.data)
    oracle = synth.load_oracle(args.rev) if args.rev else None
    if oracle is None:
        raise metrics.MissingReverseModel("--rev (reverse model) is required")
    mode = args.mode
    if mode == "mlsf":
        registry = _load_mlsf(args.fwd)

        def forward(tokens, language):
            pair = registry.get(language)
            ids, _ = langgloss.encode(tokens, pair.src_vocab)
            return signmodel.rollout_pose(pair, np.array(ids), max_frames=args.max_frames)
    else:
        model = _load_p2lg(args.fwd)

        def forward(tokens, language):
            gloss_tokens = langgloss.to_langgloss([t.upper() for t in tokens], language,
                                                  model.languages | {language})
            ids, _ = langgloss.encode(gloss_tokens, model.pose_stage.src_vocab)
            return signmodel.rollout_pose(model.pose_stage, np.array(ids), max_frames=args.max_frames)

    items = [(r.transcript_tokens, r.language, corpus.poses[r.id]) for r in corpus.rows]
    score = metrics.back_translation_eval(forward, oracle.decode, items)
    per_clip = []
    for r in corpus.rows:
        pose = forward(r.transcript_tokens, r.language)
        decoded = oracle.decode(pose)
        per_clip.append({
            "id": r.id,
            "language": r.language,
            "bleu_1": metrics.bleu_n(decoded, r.transcript_tokens, 1),
            "rouge": metrics.rouge(decoded, r.transcript_tokens),
            "dtw": metrics.dtw(pose, corpus.poses[r.id]),
            "reference": r.transcript,
            "decoded": " ".join(decoded),
        })
    outdir = os.path.dirname(os.path.abspath(args.report)) or "."
    stem = os.path.splitext(os.path.basename(args.report))[0]
    paths = report.write_score_report(score, per_clip, outdir, stem=stem)
    write_manifest(outdir, "evaluate", {"mode": mode}, args.seed, args.jobs,
                   [args.data], list(paths.values()))
    print(json.dumps(score.as_dict(), sort_keys=True))
    return 0


def cmd_inspect(args) -> int:
    if args.structure:
        sys.stdout.write(skeleton.structure_table())
        return 0
    if args.skels:
        with open(args.skels, "r", encoding="utf-8") as fh:
            text = fh.read()
        ids_path = str(args.skels) + ".ids"
        ids = None
        if os.path.exists(ids_path):
            with open(ids_path, "r", encoding="utf-8") as fh:
                ids = [line.strip() for line in fh if line.strip()]
        clips = storage.unpack_skels(text)
        print("index\tid\tframes\tcounters_ok")
        for i, clip in enumerate(clips):
            name = ids[i] if ids and i < len(ids) else f"line-{i}"
            print(f"{i}\t{name}\t{clip.shape[0]}\tyes")
        return 0
    raise ConfigError("inspect needs --structure or --skels")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"signforge {__version__}")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads for clip-parallel stages")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--languages", default="ASL,GSL")
    p.add_argument("--clips", type=int, default=50)
    p.add_argument("--vocab-per-language", type=int, default=6)
    p.add_argument("--frames", default="16,32")
    p.add_argument("--amplitude", type=float, default=3.0)

    p = sub.add_parser("ingest", help="parse and clean per-frame keypoint JSON")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--policy", default="replace_median",
                   choices=["replace_median", "replace_mean", "drop_frame"])
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("lift", help="2D to 3D conversion")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--percentile", type=float, default=95.0)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pack", help="pack lifted clips into a skels corpus")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("prompts", help="associate transcripts with prompt templates")
    p.add_argument("--bank", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("vocab", help="build a vocabulary file")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--size", type=int, default=16000)
    p.add_argument("--case-sensitive", action="store_true", default=True)
    p.add_argument("--case-insensitive", dest="case_sensitive", action="store_false")
    p.add_argument("--tsv-column", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train one of the two multilingual modes")
    p.add_argument("--mode", choices=["mlsf", "p2lg"], default="mlsf")
    p.add_argument("--langs", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("generate", help="produce a pose clip from text or prompt")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--mode", choices=["mlsf", "p2lg"], default="mlsf")
    p.add_argument("--lang", default=None)
    p.add_argument("--text", default=None)
    p.add_argument("--prompt", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="back-translation scoring")
    p.add_argument("--fwd", required=True)
    p.add_argument("--rev", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["mlsf", "p2lg"], default="mlsf")
    p.add_argument("--max-frames", type=int, default=None)
    p.add_argument("--report", required=True)

    p = sub.add_parser("inspect", help="print structure tables or skels stats")
    p.add_argument("--structure", action="store_true")
    p.add_argument("--skels", default=None)

    return parser


HANDLERS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "lift": cmd_lift,
    "pack": cmd_pack,
    "prompts": cmd_prompts,
    "vocab": cmd_vocab,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    except Exception as exc:  # module errors: machine-readable record, exit 1
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
