"""Command-line front end.

Subcommands mirror the pipeline stages: synth, ingest, embed, split, train,
eval, ablate, explain, report. Exit codes: 0 success, 1 usage error, 2 data
or runtime error. An optional `--config key=value-file` supplies defaults
that explicit flags override. Given equal seeds and inputs, every command
rewrites byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import ablate as ab
from . import baselines as bl
from . import checkpoint as ckpt
from .corpus import (Corpus, balance_sample, chronological_split,
                     ingest_records, labels_array, load_schema, posts_in_slice,
                     save_schema, split_train_test, subcorpus, write_records,
                     write_split_manifest)
from .embed import (EmbeddingMatrix, assemble_matrix, embed_corpus, hash_embed,
                    read_embeddings, write_embeddings, Segment)
from .errors import CovExplainError, DataError
from .explain import (attribution_csv, attribution_html,
                      explain_feature_groups, explain_tokens)
from .model import (ModelParams, TrainConfig, bce_loss, forward, predict,
                    predict_labels, softmax, train)
from .synth import SignalSpec, generate, planted_fusion_spec
from .embed import FusedVector

_MODEL_FLAGS = {"covexplain": "CovExplain", "linear": "Linear",
                "gnb": "GaussianNB", "svm": "SvmRbf"}


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; data problems exit 2 (mapped in main)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_config_pairs(path: str) -> list[str]:
    """key=value lines -> injected flag tokens (explicit flags win later)."""
    tokens: list[str] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read config file {path}: {e}") from None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line without '=': {raw.strip()!r}")
        key, value = line.split("=", 1)
        tokens.extend([f"--{key.strip()}", value.strip()])
    return tokens


def _parse_emb(spec: str) -> dict[str, str]:
    parts = [p for p in spec.split(",") if p]
    if not parts or len(parts) > 2:
        raise DataError("--emb expects 'tweet.cvxe' or 'tweet.cvxe,desc.cvxe'")
    out = {"tweet": parts[0]}
    if len(parts) == 2:
        out["description"] = parts[1]
    return out


def _load_embeddings(spec: str | None) -> dict[str, EmbeddingMatrix]:
    if not spec:
        return {}
    return {name: read_embeddings(path)
            for name, path in _parse_emb(spec).items()}


def _split_features(values: str) -> tuple[list[str], list[str]]:
    names = [v.strip() for v in values.split(",") if v.strip()]
    if not names:
        raise DataError("no features selected")
    online = [n for n in names if n in ("tweet", "description")]
    offline = [n for n in names if n not in ("tweet", "description")]
    return online, offline


def _get_corpus(args) -> Corpus:
    schema = load_schema(args.schema) if getattr(args, "schema", None) else None
    return ingest_records(args.corpus, schema)


def _layout_string(layout) -> str:
    return ";".join(f"{s.name}:{s.offset}:{s.length}" for s in layout)


def _layout_parse(text: str) -> tuple[Segment, ...]:
    segs = []
    for part in text.split(";"):
        name, offset, length = part.split(":")
        segs.append(Segment(name, int(offset), int(length)))
    return tuple(segs)


def cmd_synth(args) -> int:
    if args.planted:
        spec = planted_fusion_spec(n_records=args.n, seed=args.seed)
    else:
        spec = SignalSpec(n_records=args.n,
                          text_signal_strength=args.text_signal,
                          desc_signal_strength=args.desc_signal,
                          class_balance=args.balance,
                          seed=args.seed)
    corpus = generate(spec)
    write_records(corpus, args.out)
    if args.schema_out:
        save_schema(corpus.schema, args.schema_out)
    counts = {label.name.lower(): n for label, n in corpus.counts().items()}
    print(f"synth: wrote {len(corpus)} records to {args.out} ({counts})")
    return 0


def cmd_ingest(args) -> int:
    corpus = _get_corpus(args)
    counts = corpus.counts()
    if args.out:
        write_records(corpus, args.out)
    if args.schema_out:
        save_schema(corpus.schema, args.schema_out)
    anti = sum(v for k, v in counts.items() if k.value == 0)
    pro = sum(v for k, v in counts.items() if k.value == 1)
    print(f"ingest: {len(corpus)} records ok (anti={anti}, pro={pro})")
    return 0


def cmd_embed(args) -> int:
    corpus = _get_corpus(args)
    field = {"tweet": "text", "description": "description"}.get(
        args.field, args.field)
    matrix = embed_corpus(corpus, field, args.dim, args.seed)
    write_embeddings(matrix, args.out)
    print(f"embed: {len(matrix.ids)} rows x {matrix.dim} dims -> {args.out}")
    return 0


def cmd_split(args) -> int:
    corpus = _get_corpus(args)
    slices = chronological_split(corpus, args.k)
    write_split_manifest(slices, args.out)
    sizes = [0] * slices.k
    for s in slices.assignment.values():
        sizes[s] += 1
    print(f"split: k={args.k} sizes={sizes} -> {args.out}")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                       batch_size=args.batch_size, hidden_dim=args.hidden,
                       dropout_p=args.dropout, seed=args.seed)


def cmd_train(args) -> int:
    corpus = _get_corpus(args)
    embeddings = _load_embeddings(args.emb)
    online, offline = _split_features(args.features)
    slices = chronological_split(corpus, args.k)
    if args.balance == "pre-split":
        corpus = balance_sample(corpus, args.seed)
        slices = chronological_split(corpus, args.k)
    train_posts, _ = split_train_test(corpus, slices)
    train_sub = subcorpus(corpus, train_posts)
    if args.balance == "post-split":
        train_sub = balance_sample(train_sub, args.seed)
    x, layout = assemble_matrix(train_sub.posts, embeddings, corpus.schema,
                                online, offline)
    y = labels_array(train_sub.posts)
    extra = {
        "features": args.features,
        "layout": _layout_string(layout),
        "k": str(args.k),
        "hash_seed": str(args.hash_seed),
    }
    if args.model_kind == "covexplain":
        cfg = _train_config(args)
        params, history = train(x, y, cfg)
        ckpt.save_model(args.out, params, extra)
        if args.metrics_out:
            with open(args.metrics_out, "w", encoding="utf-8",
                      newline="\n") as fh:
                fh.write("epoch,loss,accuracy\n")
                for m in history:
                    fh.write(f"{m.epoch},{m.loss:.6f},{m.accuracy:.6f}\n")
        final = history[-1]
        print(f"train: {len(y)} rows, {x.shape[1]} dims, "
              f"{cfg.epochs} epochs; final loss={final.loss:.4f} "
              f"acc={final.accuracy:.4f} -> {args.out}")
    else:
        if args.model_kind == "linear":
            model = bl.fit_linear(x, y, ridge=args.ridge)
        elif args.model_kind == "gnb":
            model = bl.fit_gnb(x, y)
        else:
            model = bl.fit_svm_rbf(x, y, c=args.svm_c, gamma=args.svm_gamma)
        ckpt.save_baseline(args.out, model, extra)
        if args.metrics_out:
            acc = float((bl.predict(model, x) == y).mean())
            with open(args.metrics_out, "w", encoding="utf-8",
                      newline="\n") as fh:
                fh.write("epoch,loss,accuracy\n")
                fh.write(f"0,nan,{acc:.6f}\n")
        print(f"train: {args.model_kind} on {len(y)} rows -> {args.out}")
    return 0


def _assemble_for_checkpoint(posts, embeddings, schema, config):
    online, offline = _split_features(config["features"])
    x, layout = assemble_matrix(posts, embeddings, schema, online, offline)
    want = _layout_parse(config["layout"])
    if layout != want:
        raise DataError(
            "assembled layout does not match the checkpoint "
            f"({_layout_string(layout)} vs {config['layout']}); check --emb "
            "dims and schema")
    return x


def cmd_eval(args) -> int:
    corpus = _get_corpus(args)
    embeddings = _load_embeddings(args.emb)
    model, config = ckpt.load_any(args.model)
    slices = chronological_split(corpus, args.k)
    test_posts = posts_in_slice(corpus, slices, slices.k - 1)
    x = _assemble_for_checkpoint(test_posts, embeddings, corpus.schema, config)
    y = labels_array(test_posts)
    lines = [f"n_test,{len(y)}"]
    if isinstance(model, ModelParams):
        pred = predict_labels(model, x)
        probs = softmax(forward(model, x, "eval"))
        loss = bce_loss(np.eye(2)[y], probs)
        lines.append(f"accuracy,{float((pred == y).mean()):.6f}")
        lines.append(f"mean_loss,{loss:.6f}")
        if args.mc_samples > 0:
            preds = predict(model, x, mc_samples=args.mc_samples,
                            seed=args.seed)
            mean_std = float(np.mean([p.mc_std.mean() for p in preds]))
            lines.append(f"mc_samples,{args.mc_samples}")
            lines.append(f"mean_mc_std,{mean_std:.6f}")
    else:
        pred = bl.predict(model, x)
        lines.append(f"accuracy,{float((pred == y).mean()):.6f}")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("metric,value\n")
        for line in lines:
            fh.write(line + "\n")
    print(f"eval: {lines[1]} on {len(y)} held-out rows -> {args.out}")
    return 0


def cmd_ablate(args) -> int:
    corpus = _get_corpus(args)
    embeddings = _load_embeddings(args.emb)
    if args.features:
        online, offline = _split_features(args.features)
    else:
        online = [n for n in ("tweet", "description") if n in embeddings]
        offline = list(corpus.schema.names)
    configs = ab.enumerate_feature_sets(offline, online)
    if args.models.strip().lower() == "all":
        models = list(ab.MODEL_NAMES)
    else:
        models = []
        for name in args.models.split(","):
            key = name.strip().lower()
            if key not in _MODEL_FLAGS:
                raise DataError(f"unknown model {name!r}; choose from "
                                f"{sorted(_MODEL_FLAGS)} or 'all'")
            models.append(_MODEL_FLAGS[key])
    report = ab.run_matrix(
        corpus, embeddings, configs, models, args.replicates, args.seed,
        k=args.k, train_config=_train_config(args), ridge=args.ridge,
        svm_c=args.svm_c, svm_gamma=args.svm_gamma, workers=args.workers)
    markdown, csv = ab.summarize(report)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.csv").write_text(csv, encoding="utf-8")
    (out_dir / "report.md").write_text(markdown, encoding="utf-8")
    print(f"ablate: {len(configs)} configs x {len(models)} models x "
          f"{args.replicates} replicates -> {out_dir}/report.csv")
    return 0


def cmd_explain(args) -> int:
    corpus = _get_corpus(args)
    model, config = ckpt.load_any(args.model)
    if not isinstance(model, ModelParams):
        raise DataError("explain requires an mlp checkpoint")
    post = next((p for p in corpus.posts if p.id == args.id), None)
    if post is None:
        raise DataError(f"record {args.id!r} not in corpus")
    embeddings = _load_embeddings(args.emb)
    layout = _layout_parse(config["layout"])
    online, offline = _split_features(config["features"])
    hash_seed = int(config.get("hash_seed", "0"))

    fused_x = _assemble_for_checkpoint([post], embeddings, corpus.schema,
                                       config)[0]
    fused = FusedVector(fused_x, layout)

    if args.target_class == "auto":
        target = int(predict_labels(model, fused_x[None, :])[0])
    else:
        target = 0 if args.target_class == "anti" else 1

    if args.unit == "groups":
        slices = chronological_split(corpus, int(config.get("k", args.k)))
        train_posts, _ = split_train_test(corpus, slices)
        x_train = _assemble_for_checkpoint(train_posts, embeddings,
                                           corpus.schema, config)
        baseline = x_train.mean(axis=0)
        attr = explain_feature_groups(model, fused, target, baseline,
                                      record_id=post.id)
    else:
        tweet_seg = next((s for s in layout if s.name == "tweet"), None)
        if tweet_seg is None:
            raise DataError("token explanations need a tweet segment in the "
                            "checkpoint layout")

        def embed_fn(text: str) -> np.ndarray:
            x = fused_x.copy()
            sl = slice(tweet_seg.offset, tweet_seg.offset + tweet_seg.length)
            x[sl] = hash_embed(text, tweet_seg.length, hash_seed)
            return x

        attr = explain_tokens(model, post, embed_fn, target,
                              permutations=args.permutations, seed=args.seed)

    Path(args.out).write_text(attribution_csv(attr), encoding="utf-8")
    if args.html:
        Path(args.html).write_text(attribution_html(attr, target),
                                   encoding="utf-8")
    top = attr.entries[0] if attr.entries else None
    label = "anti" if target == 0 else "pro"
    extra = f", top={top.name!r} phi={top.phi:.4g}" if top else ""
    print(f"explain: {args.unit} attribution of {post.id} toward "
          f"{label}{extra} -> {args.out}")
    return 0


def _markdown_from_csv(csv_text: str) -> str:
    import csv as _csv
    import io
    rows = list(_csv.DictReader(io.StringIO(csv_text)))
    if not rows:
        raise DataError("empty grid CSV")
    models = list(dict.fromkeys(r["model"] for r in rows))
    config_rows = list(dict.fromkeys((r["group"], r["config"]) for r in rows))
    by_key = {(r["group"], r["config"], r["model"]): r for r in rows}
    best: dict[str, tuple[str, str]] = {}
    second: dict[str, tuple[str, str]] = {}
    for m in models:
        scored = []
        for g, c in config_rows:
            r = by_key.get((g, c, m))
            if r and r["status"] == "ok" and r["mean_acc"]:
                scored.append((float(r["mean_acc"]), (g, c)))
        scored.sort(reverse=True)
        if scored:
            best[m] = scored[0][1]
        if len(scored) > 1:
            second[m] = scored[1][1]
    lines = ["| Group | Features | " + " | ".join(models) + " |",
             "|---" * (2 + len(models)) + "|"]
    prev_group = None
    for g, c in config_rows:
        row = [g if g != prev_group else "", c]
        prev_group = g
        for m in models:
            r = by_key.get((g, c, m))
            if r is None or r["status"] != "ok" or not r["mean_acc"]:
                row.append("—(error)")
                continue
            text = f"{float(r['mean_acc']):.2f} ± {float(r['std_acc']):.1f}"
            if best.get(m) == (g, c):
                text = f"**{text}**"
            elif second.get(m) == (g, c):
                text = f"<u>{text}</u>"
            row.append(text)
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _read_text_or_raise(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None


def cmd_report(args) -> int:
    parts = ["# Stance classification report", ""]
    if args.grid:
        csv_text = _read_text_or_raise(args.grid)
        parts += ["## Feature ablation", "", _markdown_from_csv(csv_text)]
    if args.attributions:
        parts += ["## Token attributions", ""]
        for path in args.attributions.split(","):
            path = path.strip()
            if not path:
                continue
            lines = _read_text_or_raise(path).splitlines()
            parts += [f"### {Path(path).stem}", "",
                      "| rank | name | phi |", "|---|---|---|"]
            for line in lines[1:args.top_k + 1]:
                rank, name, phi = line.split(",", 2)
                parts.append(f"| {rank} | {name} | {phi} |")
            parts.append("")
    if len(parts) <= 2:
        raise DataError("nothing to report: pass --grid and/or --attributions")
    text = "\n".join(parts).rstrip() + "\n"
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"report: -> {args.out}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="covexplain",
                     description="Vaccine-stance pipeline: synthesize, embed, "
                                 "split, train, evaluate, ablate, explain.")
    parser.add_argument("--config", help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--text-signal", type=float, default=0.5)
    p.add_argument("--desc-signal", type=float, default=0.0)
    p.add_argument("--balance", type=float, default=0.5)
    p.add_argument("--planted", action="store_true",
                   help="use the disjoint planted-signal spec")
    p.add_argument("--schema-out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a JSONL corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--schema-out")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("embed", help="hash-embed one text field to CVXE")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--field", choices=["tweet", "text", "description"],
                   default="text")
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("split", help="write a chronological split manifest")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    def add_train_flags(p):
        p.add_argument("--hidden", type=int, default=1024)
        p.add_argument("--epochs", type=int, default=80)
        p.add_argument("--batch-size", type=int, default=256)
        p.add_argument("--lr", type=float, default=1e-2)
        p.add_argument("--dropout", type=float, default=0.2)
        p.add_argument("--ridge", type=float, default=1e-3)
        p.add_argument("--svm-c", type=float, default=1.0)
        p.add_argument("--svm-gamma", type=float, default=None)

    p = sub.add_parser("train", help="train a model on the training slices")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--emb", help="tweet.cvxe[,desc.cvxe]")
    p.add_argument("--features", required=True,
                   help="comma list from tweet,description,<offline...>")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hash-seed", type=int, default=0)
    p.add_argument("--balance", choices=["post-split", "pre-split", "none"],
                   default="post-split")
    p.add_argument("--model-kind",
                   choices=["covexplain", "linear", "gnb", "svm"],
                   default="covexplain")
    p.add_argument("--out", required=True)
    p.add_argument("--metrics-out")
    add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the last slice")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--emb")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the feature-ablation grid")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--emb")
    p.add_argument("--features")
    p.add_argument("--models", default="all",
                   help="'all' or comma list of covexplain,linear,gnb,svm")
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    add_train_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("explain", help="Shapley attribution for one record")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema")
    p.add_argument("--emb")
    p.add_argument("--model", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--unit", choices=["tokens", "groups"], default="tokens")
    p.add_argument("--target-class", choices=["auto", "anti", "pro"],
                   default="auto")
    p.add_argument("--permutations", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--html")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("report", help="render markdown from grid/attribution CSVs")
    p.add_argument("--grid")
    p.add_argument("--attributions", help="comma list of attribution CSVs")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _inject_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    pairs = _read_config_pairs(argv[i + 1])
    rest = argv[:i] + argv[i + 2:]
    # insert defaults right after the subcommand; later flags override
    for j, tok in enumerate(rest):
        if not tok.startswith("-"):
            return rest[:j + 1] + pairs + rest[j + 1:]
    return rest + pairs


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(_inject_config(argv))
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except CovExplainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
