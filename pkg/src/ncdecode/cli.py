"""Command-line entry point tying the modules into reproducible experiments.

Commands: world-gen, train, decode, eval, sweep, curve, retrieve,
serve-mock-scorer. Every command writes a RunRecord; decode/sweep/curve can
be rerun from one (--from-record) and reproduce their outputs byte for byte.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 runtime failure.
NC_DECODER_HOME overrides the default output root.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .data import load_collection, load_dataset, save_dataset
from .decode import (
    BeamConfig,
    ONLINE_SCALING,
    RERANK_SCALING,
    ScalingConfig,
    beam_search_direct,
    enumerate_oracle,
    online_decode,
    online_decode_liu,
    rerank,
)
from .errors import ConfigError, DataError, NcdecodeError
from .experiments import (
    budget_curve,
    curve_to_csv,
    example_condition,
    lm_condition,
    liu_factorization,
    sweep,
)
from .metrics import evaluate_outputs
from .records import (
    build_run_record,
    config_hash,
    dump_json,
    dump_jsonl,
    load_run_record,
    resolve_config,
    save_run_record,
    split_seed,
)
from .retrieval import index_documents, recall_at_1, retrieve_bi, retrieve_cross
from .scorers import (
    Condition,
    ROLE_CHANNEL,
    ROLE_DIRECT,
    ROLE_LM,
    TruncationPolicy,
    annotate_control_tokens,
    fit_ngram,
    load_model,
    make_channel_training_pairs,
    save_model,
)
from .vocab import Vocabulary, detokenize
from .world import WorldSpec, build_world, sample_dataset

DECODERS = ("direct", "rerank", "online-ours", "online-liu", "oracle")

DECODE_DEFAULTS = {
    "seed": 0,
    "decoder": "online-ours",
    "scaling": {"lambda_direct": 1.0, "lambda_channel": None, "lambda_lm": None},
    "beam": {
        "beam": 4,
        "liu_k1": None,
        "liu_k2": None,
        "max_len": 16,
        "length_normalize_final": True,
    },
    "workers": None,
    "force_control_high": False,
}

TRAIN_DEFAULTS = {
    "seed": 0,
    "order": 3,
    "k": 0.1,
    "truncation": "uniform",
    "control": "none",
    "control_thresholds": [0.7, 0.3],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        sys.exit(1)


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError("config file not found: %s" % path)
    except json.JSONDecodeError as exc:
        raise ConfigError("malformed config file %s: %s" % (path, exc))


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError("--set expects key.path=value, got %r" % (pair,))
        key, raw = pair.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return out


def _out_dir(args, command, config):
    if args.out:
        out = args.out
    else:
        root = os.environ.get("NC_DECODER_HOME", os.path.join(os.getcwd(), "runs"))
        out = os.path.join(root, "%s-%s" % (command, config_hash(config)[:12]))
    os.makedirs(out, exist_ok=True)
    return out


def _load_models(models_dir, vocab, roles):
    scorers = {}
    for role in roles:
        path = os.path.join(models_dir, "%s.json" % role)
        if not os.path.exists(path):
            raise DataError("missing model file %s" % path)
        scorers[role] = load_model(path, vocab)
    return scorers


def _scaling_for(decoder, cfg):
    base = {
        "direct": ScalingConfig(1.0, 0.0, 0.0),
        "rerank": RERANK_SCALING,
        "online-ours": ONLINE_SCALING,
        "online-liu": ONLINE_SCALING,
        "oracle": ONLINE_SCALING,
    }[decoder]
    s = cfg["scaling"]
    return ScalingConfig(
        s["lambda_direct"] if s["lambda_direct"] is not None else base.lambda_direct,
        s["lambda_channel"] if s["lambda_channel"] is not None else base.lambda_channel,
        s["lambda_lm"] if s["lambda_lm"] is not None else base.lambda_lm,
    )


def _beam_config(cfg):
    b = cfg["beam"]
    return BeamConfig(
        beam=b["beam"],
        liu_k1=b["liu_k1"],
        liu_k2=b["liu_k2"],
        max_len=b["max_len"],
        length_normalize_final=b["length_normalize_final"],
    )


_WORKER_STATE = {}


def _init_worker(payload):
    _WORKER_STATE.update(payload)


def _decode_one(example):
    decoder = _WORKER_STATE["decoder"]
    scorers = _WORKER_STATE["scorers"]
    scaling = _WORKER_STATE["scaling"]
    beam_cfg = _WORKER_STATE["beam_cfg"]
    vocab = _WORKER_STATE["vocab"]
    force_high = _WORKER_STATE["force_control_high"]
    control = (vocab.control_id("high"),) if force_high else example.control
    cond = example_condition(example, forced_control=control)
    if decoder == "direct":
        nbest = beam_search_direct(scorers[ROLE_DIRECT], cond, beam_cfg)
        hyps = list(nbest.hypotheses)
    elif decoder == "rerank":
        nbest = beam_search_direct(scorers[ROLE_DIRECT], cond, beam_cfg)
        best = rerank(nbest, scorers[ROLE_CHANNEL], scorers[ROLE_LM], scaling,
                      condition=cond)
        hyps = [best]
    elif decoder == "online-ours":
        hyps = [online_decode(scorers[ROLE_DIRECT], scorers[ROLE_CHANNEL],
                              scorers[ROLE_LM], cond, scaling, beam_cfg)]
    elif decoder == "online-liu":
        hyps = [online_decode_liu(scorers[ROLE_DIRECT], scorers[ROLE_CHANNEL],
                                  scorers[ROLE_LM], cond, scaling, beam_cfg)]
    elif decoder == "oracle":
        best, _ = enumerate_oracle(
            scorers[ROLE_DIRECT], scorers[ROLE_CHANNEL], scorers[ROLE_LM],
            cond, scaling, beam_cfg.max_len,
            length_normalize=beam_cfg.length_normalize_final,
        )
        hyps = [best]
    else:
        raise ConfigError("unknown decoder %r" % (decoder,))
    rows = []
    for rank, hyp in enumerate(hyps):
        rows.append({
            "example_id": example.id,
            "rank": rank,
            "tokens": list(hyp.content),
            "text": detokenize(hyp.content, vocab),
            "direct_lp": hyp.direct_lp,
            "channel_lp": hyp.channel_lp,
            "lm_lp": hyp.lm_lp,
            "combined": hyp.combined,
            "finished": hyp.finished,
        })
    return rows


def _run_decode(examples, payload, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            all_rows = list(pool.map(_decode_one, examples, chunksize=8))
    else:
        _init_worker(payload)
        all_rows = [_decode_one(ex) for ex in examples]
    return [row for rows in all_rows for row in rows]


def cmd_world_gen(args):
    with open(args.spec, encoding="utf-8") as fh:
        spec_obj = json.load(fh)
    sizes = spec_obj.pop("datasets", {"train": 2000, "valid": 200, "test": 500})
    config = {"spec": spec_obj, "datasets": sizes}
    out = _out_dir(args, "world-gen", config)
    spec = WorldSpec(**spec_obj)
    world = build_world(spec)
    world_path = os.path.join(out, "world.json")
    world.save(world_path)
    vocab_path = os.path.join(out, "vocab.txt")
    world.vocab.save(vocab_path)
    outputs = [world_path, vocab_path]
    for split, n in sorted(sizes.items()):
        examples = sample_dataset(world, n, split_seed(spec.seed, "dataset/%s" % split))
        path = os.path.join(out, "%s.jsonl" % split)
        save_dataset(examples, world.vocab, path)
        outputs.append(path)
    record = build_run_record("world-gen", config, [args.spec], outputs, spec.seed)
    save_run_record(record, out)
    print("world written to %s" % out)
    return 0


def cmd_train(args):
    cfg = resolve_config(TRAIN_DEFAULTS, _load_config_file(args.config),
                         _parse_overrides(args.set))
    if not os.path.exists(args.data):
        raise DataError("missing data path %s" % args.data)
    data_dir = os.path.dirname(os.path.abspath(args.data))
    vocab = Vocabulary.load(os.path.join(data_dir, "vocab.txt"))
    examples = load_dataset(args.data, vocab)
    if cfg["control"] == "annotate":
        high, low = cfg["control_thresholds"]
        annotated = []
        for ex in examples:
            control = annotate_control_tokens(ex, vocab, high, low)
            annotated.append(
                type(ex)(id=ex.id, context=ex.context, document=ex.document,
                         response=ex.response, control=control)
            )
        examples = annotated
    out = _out_dir(args, "train", cfg)
    direct_pairs = [
        (Condition(context=ex.context, role=ROLE_DIRECT, document=ex.document,
                   control=ex.control), ex.response)
        for ex in examples
    ]
    lm_pairs = [
        (Condition(context=ex.context, role=ROLE_LM), ex.response) for ex in examples
    ]
    policy = TruncationPolicy(distribution=cfg["truncation"],
                              seed=split_seed(cfg["seed"], "truncation"))
    channel_pairs = make_channel_training_pairs(examples, policy)
    vocab_out = os.path.join(out, "vocab.txt")
    vocab.save(vocab_out)
    outputs = [vocab_out]
    for role, pairs in (
        (ROLE_DIRECT, direct_pairs), (ROLE_CHANNEL, channel_pairs), (ROLE_LM, lm_pairs)
    ):
        scorer = fit_ngram(pairs, cfg["order"], cfg["k"], vocab, role)
        path = os.path.join(out, "%s.json" % role)
        save_model(scorer, path)
        outputs.append(path)
    record = build_run_record("train", cfg, [args.data], outputs, cfg["seed"])
    save_run_record(record, out)
    print("models written to %s" % out)
    return 0


def cmd_decode(args):
    if args.from_record:
        record_cfg = load_run_record(args.from_record)["config"]
        cfg = resolve_config(DECODE_DEFAULTS, record_cfg, _parse_overrides(args.set))
        args.data = args.data or record_cfg.get("data_path")
        args.models = args.models or record_cfg.get("models_dir")
    else:
        cfg = resolve_config(DECODE_DEFAULTS, _load_config_file(args.config),
                             _parse_overrides(args.set))
    if args.decoder:
        cfg["decoder"] = args.decoder
    if args.workers is not None:
        cfg["workers"] = args.workers
    if cfg["decoder"] not in DECODERS:
        raise ConfigError("unknown decoder %r" % (cfg["decoder"],))
    if not args.data or not args.models:
        raise ConfigError("decode needs --data and --models (or --from-record)")
    cfg["data_path"] = os.path.abspath(args.data)
    cfg["models_dir"] = os.path.abspath(args.models)
    vocab = Vocabulary.load(os.path.join(cfg["models_dir"], "vocab.txt"))
    roles = (ROLE_DIRECT,) if cfg["decoder"] == "direct" else (
        ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM)
    scorers = _load_models(cfg["models_dir"], vocab, roles)
    scorers.setdefault(ROLE_CHANNEL, None)
    scorers.setdefault(ROLE_LM, None)
    examples = load_dataset(args.data, vocab)
    scaling = _scaling_for(cfg["decoder"], cfg)
    cfg["scaling"] = {
        "lambda_direct": scaling.lambda_direct,
        "lambda_channel": scaling.lambda_channel,
        "lambda_lm": scaling.lambda_lm,
    }
    beam_cfg = _beam_config(cfg)
    if cfg["decoder"] == "online-liu" and beam_cfg.liu_k1 is None:
        k1, k2 = liu_factorization(beam_cfg.beam)
        beam_cfg = BeamConfig(beam=beam_cfg.beam, liu_k1=k1, liu_k2=k2,
                              max_len=beam_cfg.max_len,
                              length_normalize_final=beam_cfg.length_normalize_final)
        cfg["beam"]["liu_k1"], cfg["beam"]["liu_k2"] = k1, k2
    cfg["effective_beam"] = beam_cfg.effective_beam
    out = _out_dir(args, "decode", cfg)
    payload = {
        "decoder": cfg["decoder"],
        "scorers": scorers,
        "scaling": scaling,
        "beam_cfg": beam_cfg,
        "vocab": vocab,
        "force_control_high": cfg["force_control_high"],
    }
    rows = _run_decode(examples, payload, cfg["workers"])
    nbest_path = os.path.join(out, "nbest.jsonl")
    dump_jsonl(rows, nbest_path)
    inputs = [args.data] + [
        os.path.join(cfg["models_dir"], "%s.json" % r) for r in roles
    ]
    record = build_run_record("decode", cfg, inputs, [nbest_path], cfg["seed"])
    save_run_record(record, out)
    print("n-best written to %s" % nbest_path)
    return 0


def cmd_eval(args):
    cfg = resolve_config({"seed": 0}, _load_config_file(args.config),
                         _parse_overrides(args.set))
    run_dir = args.run
    nbest_path = os.path.join(run_dir, "nbest.jsonl")
    if not os.path.exists(nbest_path):
        raise DataError("missing n-best dump %s" % nbest_path)
    data_dir = os.path.dirname(os.path.abspath(args.references))
    vocab = Vocabulary.load(args.vocab or os.path.join(data_dir, "vocab.txt"))
    examples = load_dataset(args.references, vocab)
    by_id = {}
    with open(nbest_path, encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            if row["rank"] == 0:
                by_id[row["example_id"]] = tuple(row["tokens"])
    contents = []
    for ex in examples:
        if ex.id not in by_id:
            raise DataError("no hypothesis for example %s" % ex.id)
        contents.append(by_id[ex.id])
    lm_scorer = None
    if args.models:
        lm_scorer = _load_models(args.models, vocab, (ROLE_LM,))[ROLE_LM]
    report = evaluate_outputs(
        examples, contents, lm_scorer=lm_scorer,
        lm_conditions=[lm_condition(ex) for ex in examples] if lm_scorer else None,
    )
    out = _out_dir(args, "eval", cfg)
    report_obj = report.to_dict()
    report_obj["config"] = cfg
    report_obj["factuality_proxy"] = "token_f1"
    metrics_path = os.path.join(out, "metrics.json")
    dump_json(report_obj, metrics_path)
    sidecar = os.path.join(out, "per_example.jsonl")
    dump_jsonl(report.per_example, sidecar)
    record = build_run_record("eval", cfg, [args.references, nbest_path],
                              [metrics_path, sidecar], cfg["seed"])
    save_run_record(record, out)
    print(json.dumps(report_obj, sort_keys=True))
    return 0


def _parse_grid_axis(value):
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, list):
        return [float(x) for x in value]
    text = str(value)
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        values, v = [], lo
        while v <= hi + 1e-9:
            values.append(round(v, 10))
            v += step
        return values
    return [float(x) for x in text.split(",")]


def cmd_sweep(args):
    if args.from_record:
        cfg = resolve_config(
            {}, load_run_record(args.from_record)["config"], _parse_overrides(args.set)
        )
        args.data = args.data or cfg.get("data_path")
        args.models = args.models or cfg.get("models_dir")
    else:
        defaults = {
            "seed": 0,
            "decoder": "online-ours",
            "grid_l1": "0.0,0.5,1.0",
            "grid_l2": "0.5",
            "selection_metric": "token_f1",
            "beam": {"beam": 4, "max_len": 16, "length_normalize_final": True},
        }
        cfg = resolve_config(defaults, _load_config_file(args.config),
                             _parse_overrides(args.set))
    if not args.data or not args.models:
        raise ConfigError("sweep needs --data and --models (or --from-record)")
    cfg["data_path"] = os.path.abspath(args.data)
    cfg["models_dir"] = os.path.abspath(args.models)
    vocab = Vocabulary.load(os.path.join(cfg["models_dir"], "vocab.txt"))
    scorers = _load_models(cfg["models_dir"], vocab,
                           (ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM))
    examples = load_dataset(args.data, vocab)
    grid = [(l1, l2) for l1 in _parse_grid_axis(cfg["grid_l1"])
            for l2 in _parse_grid_axis(cfg["grid_l2"])]
    beam_cfg = BeamConfig(**cfg["beam"])

    def decode_fn(example, scaling):
        cond = example_condition(example)
        if cfg["decoder"] == "rerank":
            nbest = beam_search_direct(scorers[ROLE_DIRECT], cond, beam_cfg)
            return rerank(nbest, scorers[ROLE_CHANNEL], scorers[ROLE_LM], scaling,
                          condition=cond)
        return online_decode(scorers[ROLE_DIRECT], scorers[ROLE_CHANNEL],
                             scorers[ROLE_LM], cond, scaling, beam_cfg)

    result = sweep(examples, decode_fn, grid,
                   selection_metric=cfg["selection_metric"],
                   decoder_name=cfg["decoder"], lm_scorer=scorers[ROLE_LM])
    out = _out_dir(args, "sweep", cfg)
    sweep_obj = result.to_dict()
    sweep_obj["config"] = cfg
    sweep_path = os.path.join(out, "sweep.json")
    dump_json(sweep_obj, sweep_path)
    record = build_run_record("sweep", cfg, [args.data], [sweep_path], cfg["seed"])
    save_run_record(record, out)
    print("sweep written to %s (best %s)" % (sweep_path, result.best_point))
    return 0


def cmd_curve(args):
    if args.from_record:
        cfg = resolve_config(
            {}, load_run_record(args.from_record)["config"], _parse_overrides(args.set)
        )
        args.data = args.data or cfg.get("data_path")
        args.models = args.models or cfg.get("models_dir")
    else:
        defaults = {
            "seed": 0,
            "budgets": "1,2,4,8,16",
            "kinds": "direct,online-ours,online-liu",
            "scaling": {"lambda_direct": 1.0, "lambda_channel": 0.6, "lambda_lm": 0.4},
            "max_len": 16,
            "length_normalize_final": True,
        }
        cfg = resolve_config(defaults, _load_config_file(args.config),
                             _parse_overrides(args.set))
    if not args.data or not args.models:
        raise ConfigError("curve needs --data and --models (or --from-record)")
    cfg["data_path"] = os.path.abspath(args.data)
    cfg["models_dir"] = os.path.abspath(args.models)
    vocab = Vocabulary.load(os.path.join(cfg["models_dir"], "vocab.txt"))
    scorers = _load_models(cfg["models_dir"], vocab,
                           (ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM))
    examples = load_dataset(args.data, vocab)
    budgets = [int(b) for b in str(cfg["budgets"]).split(",")]
    kinds = cfg["kinds"].split(",")
    s = cfg["scaling"]
    scaling = ScalingConfig(s["lambda_direct"], s["lambda_channel"], s["lambda_lm"])
    rows = budget_curve(
        examples, (scorers[ROLE_DIRECT], scorers[ROLE_CHANNEL], scorers[ROLE_LM]),
        scaling, budgets, kinds=kinds, max_len=cfg["max_len"],
        length_normalize_final=cfg["length_normalize_final"],
    )
    out = _out_dir(args, "curve", cfg)
    curve_path = os.path.join(out, "curve.csv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write(curve_to_csv(rows))
    record = build_run_record("curve", cfg, [args.data], [curve_path], cfg["seed"])
    save_run_record(record, out)
    print("curve written to %s" % curve_path)
    return 0


def cmd_retrieve(args):
    cfg = resolve_config({"seed": 0, "k": 10, "kind": "bi"},
                         _load_config_file(args.config), _parse_overrides(args.set))
    if args.kind:
        cfg["kind"] = args.kind
    data_dir = os.path.dirname(os.path.abspath(args.data))
    vocab = Vocabulary.load(args.vocab or os.path.join(data_dir, "vocab.txt"))
    collection = load_collection(args.collection, vocab)
    examples = load_dataset(args.data, vocab)
    index = index_documents(collection, vocab_hash=vocab.sha256())
    results, gold = [], {}
    content_to_id = {tuple(v): k for k, v in collection.documents.items()}
    for ex in examples:
        if cfg["kind"] == "bi":
            res = retrieve_bi(index, ex.context, cfg["k"], query_id=ex.id)
        else:
            bi = retrieve_bi(index, ex.context, cfg["k"], query_id=ex.id)
            res = retrieve_cross(index, ex.context, cfg["k"], candidates=bi,
                                 query_id=ex.id)
        results.append(res)
        if tuple(ex.document) in content_to_id:
            gold[ex.id] = content_to_id[tuple(ex.document)]
    out = _out_dir(args, "retrieve", cfg)
    dump_path = os.path.join(out, "retrieval.jsonl")
    dump_jsonl(
        [
            {"query_id": r.query_id,
             "ranked": [{"doc_id": d, "score": s} for d, s in r.ranked]}
            for r in results
        ],
        dump_path,
    )
    summary = {"kind": cfg["kind"], "n_queries": len(results)}
    if len(gold) == len(results):
        summary["recall_at_1"] = recall_at_1(results, gold)
    summary_path = os.path.join(out, "retrieval_summary.json")
    dump_json(summary, summary_path)
    record = build_run_record("retrieve", cfg, [args.data, args.collection],
                              [dump_path, summary_path], cfg["seed"])
    save_run_record(record, out)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_serve_mock_scorer(args):
    from .server import serve_models

    server = serve_models(args.model, host=args.host, port=args.port)
    host, port = server.server_address
    print("serving scorer protocol on %s:%d" % (host, port), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def build_parser():
    parser = _Parser(prog="ncdecode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("world-gen", help="build and dump a synthetic world")
    p.add_argument("spec", help="world spec JSON file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_world_gen)

    p = sub.add_parser("train", help="fit direct/channel/lm n-gram scorers")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--set", action="append")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="run a decoder over a dataset")
    p.add_argument("--config")
    p.add_argument("--models")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--decoder", choices=DECODERS)
    p.add_argument("--workers", type=int)
    p.add_argument("--from-record")
    p.add_argument("--set", action="append")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score a decode run against references")
    p.add_argument("--config")
    p.add_argument("--run", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--models")
    p.add_argument("--vocab")
    p.add_argument("--out")
    p.add_argument("--set", action="append")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="scaling-factor sweep")
    p.add_argument("--config")
    p.add_argument("--models")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--from-record")
    p.add_argument("--set", action="append")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("curve", help="compute-budget curve")
    p.add_argument("--config")
    p.add_argument("--models")
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--from-record")
    p.add_argument("--set", action="append")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("retrieve", help="rank a collection for each context")
    p.add_argument("--config")
    p.add_argument("--collection", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab")
    p.add_argument("--kind", choices=("bi", "cross"))
    p.add_argument("--out")
    p.add_argument("--set", action="append")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("serve-mock-scorer", help="serve the scorer wire protocol")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--model", action="append", required=True)
    p.set_defaults(func=cmd_serve_mock_scorer)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write("config error: %s\n" % exc)
        return 1
    except DataError as exc:
        sys.stderr.write("data error: %s\n" % exc)
        return 2
    except NcdecodeError as exc:
        sys.stderr.write("runtime failure: %s\n" % exc)
        return 3
    except Exception as exc:  # noqa: BLE001 - map anything else to exit 3
        sys.stderr.write("runtime failure: %s: %s\n" % (type(exc).__name__, exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
