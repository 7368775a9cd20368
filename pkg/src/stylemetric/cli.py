"""Command-line frontend.

Each subcommand posts one request to the HTTP service layer; by default the
service runs in-process, and --server points the same client at a remote
instance started with `stylemetric serve`. Reports render as aligned text
with 4-decimal floats, or as JSON with --json. Identical invocations
produce byte-identical reports.
"""

import argparse
import asyncio
import json
import os
import sys

import httpx

from .errors import StylemetricError, UsageError

ERROR_PREFIX = "stylemetric: error: "


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_output_flags(parser):
    parser.add_argument("--json", action="store_true", help="emit the JSON report")
    parser.add_argument("--out", help="write the report to a file instead of stdout")
    parser.add_argument("--server", help="URL of a running stylemetric server")


def _add_threads_flag(parser):
    parser.add_argument(
        "--threads",
        type=_positive_int,
        default=None,
        help="worker threads (default: STYLEMETRIC_THREADS or 1)",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stylemetric",
        description="Contrastive n-gram style metrics for captioning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="build an n-gram index from a JSONL dataset")
    p.add_argument("--dataset", required=True, help="JSONL caption file")
    p.add_argument("--out", dest="index_out", required=True, help="index file to write")
    p.add_argument(
        "--split",
        default="train",
        help="dataset split to index; rows without a split always pass; 'all' disables filtering",
    )
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--report-out", help="write the report to a file instead of stdout")
    p.add_argument("--server", help="URL of a running stylemetric server")

    p = sub.add_parser("score", help="score captions from a JSONL file")
    p.add_argument("--index", required=True)
    p.add_argument(
        "--metric",
        required=True,
        choices=["onlystyle", "stylecider", "cider", "bleu1", "bleu4"],
    )
    p.add_argument("--input", required=True, help="JSONL rows with 'caption' and optional 'style'")
    p.add_argument("--refs", help="JSONL reference rows, paired with --input by line")
    p.add_argument("--style", help="style for rows that do not carry one")
    _add_threads_flag(p)
    _add_output_flags(p)

    p = sub.add_parser("eval-gt", help="ground-truth satisfaction rates")
    p.add_argument("--index", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default="all", help="dataset split to evaluate (default: all rows)")
    p.add_argument("--mode", default="both", choices=["onlystyle", "stylecider", "both"])
    p.add_argument(
        "--comparison",
        default="all-styles",
        choices=["all-styles", "sampled-k"],
        help="contrast against every style, or k seeded samples per caption",
    )
    p.add_argument("--k", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_threads_flag(p)
    _add_output_flags(p)

    p = sub.add_parser("eval-models", help="metric table over model generation files")
    p.add_argument("--index", required=True)
    p.add_argument("--generations", required=True, help="JSONL rows with model/style/caption")
    p.add_argument("--references", required=True, help="JSONL rows with image_id/style/caption")
    _add_threads_flag(p)
    _add_output_flags(p)

    p = sub.add_parser("rank", help="rank every style for one caption")
    p.add_argument("--index", required=True)
    p.add_argument("--caption", required=True)
    p.add_argument("--target", help="style whose 1-based rank to report")
    p.add_argument("--top", type=_positive_int, help="print only the best N styles")
    _add_output_flags(p)

    p = sub.add_parser("cng", help="inspect per-style scores of single tokens")
    p.add_argument("--index", required=True)
    p.add_argument("--terms", required=True, help="comma-separated single-token terms")
    p.add_argument("--styles", help="comma-separated styles (default: all)")
    p.add_argument(
        "--style",
        action="append",
        dest="style_list",
        help="one style, repeatable; use instead of --styles for labels that contain commas",
    )
    _add_output_flags(p)

    p = sub.add_parser("corr", help="Pearson and Spearman correlation")
    p.add_argument("--scores", help="comma-separated metric scores")
    p.add_argument("--ranks", help="comma-separated human ranks")
    p.add_argument("--input", help="JSONL rows with 'score' and 'rank' fields")
    _add_output_flags(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _resolve_threads(args):
    value = getattr(args, "threads", None)
    if value is not None:
        return value
    env = os.environ.get("STYLEMETRIC_THREADS")
    if env is None or not env.strip():
        return 1
    try:
        value = int(env)
    except ValueError:
        raise UsageError(f"STYLEMETRIC_THREADS is not an integer: {env!r}")
    if value < 1:
        raise UsageError(f"STYLEMETRIC_THREADS must be >= 1, got {value}")
    return value


def _split_arg(value):
    return None if value == "all" else value


def _comma_list(value, flag):
    items = [part.strip() for part in value.split(",")]
    items = [part for part in items if part]
    if not items:
        raise UsageError(f"{flag} is empty")
    return items


def _comma_floats(value, flag):
    out = []
    for part in _comma_list(value, flag):
        try:
            out.append(float(part))
        except ValueError:
            raise UsageError(f"{flag} has a non-numeric entry: {part!r}")
    return out


def _call(server, endpoint, payload):
    """POST one request, in-process unless a server URL is given."""
    if server:
        try:
            with httpx.Client(base_url=server, timeout=600.0) as client:
                response = client.post(endpoint, json=payload)
        except httpx.HTTPError as e:
            raise UsageError(f"cannot reach server {server}: {e}")
    else:
        from .service.app import create_app

        async def go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://stylemetric.internal"
            ) as client:
                return await client.post(endpoint, json=payload)

        response = asyncio.run(go())
    if response.status_code != 200:
        try:
            body = response.json()
        except ValueError:
            body = {}
        message = body.get("error")
        if message is None and "detail" in body:
            message = json.dumps(body["detail"], sort_keys=True)
        raise UsageError(message or f"server returned HTTP {response.status_code}")
    return response.json()


def _request_payload(args):
    command = args.command
    if command == "build-index":
        return "/build-index", {
            "dataset": args.dataset,
            "out": args.index_out,
            "split": _split_arg(args.split),
        }
    if command == "score":
        return "/score", {
            "index": args.index,
            "metric": args.metric,
            "input": args.input,
            "refs": args.refs,
            "style": args.style,
            "threads": _resolve_threads(args),
        }
    if command == "eval-gt":
        return "/eval-gt", {
            "index": args.index,
            "dataset": args.dataset,
            "split": _split_arg(args.split),
            "mode": args.mode,
            "comparison": args.comparison.replace("-", "_"),
            "k": args.k,
            "seed": args.seed,
            "threads": _resolve_threads(args),
        }
    if command == "eval-models":
        return "/eval-models", {
            "index": args.index,
            "generations": args.generations,
            "references": args.references,
            "threads": _resolve_threads(args),
        }
    if command == "rank":
        return "/rank", {
            "index": args.index,
            "caption": args.caption,
            "target": args.target,
            "top": args.top,
        }
    if command == "cng":
        if args.style_list:
            styles = args.style_list
        elif args.styles:
            styles = _comma_list(args.styles, "--styles")
        else:
            styles = None
        return "/cng", {
            "index": args.index,
            "terms": _comma_list(args.terms, "--terms"),
            "styles": styles,
        }
    if command == "corr":
        if args.input and (args.scores or args.ranks):
            raise UsageError("pass either --input or --scores/--ranks, not both")
        if args.input:
            scores, ranks = _read_corr_rows(args.input)
        else:
            if not args.scores or not args.ranks:
                raise UsageError("corr needs --scores and --ranks, or --input")
            scores = _comma_floats(args.scores, "--scores")
            ranks = _comma_floats(args.ranks, "--ranks")
        return "/corr", {"scores": scores, "ranks": ranks}
    raise UsageError(f"unknown command: {command}")


def _read_corr_rows(path):
    from .corpus import iter_jsonl

    scores = []
    ranks = []
    for line_no, row in iter_jsonl(path):
        if "score" not in row or "rank" not in row:
            raise UsageError(f"{path}:{line_no}: rows need 'score' and 'rank'")
        try:
            scores.append(float(row["score"]))
            ranks.append(float(row["rank"]))
        except (TypeError, ValueError):
            raise UsageError(f"{path}:{line_no}: non-numeric score or rank")
    return scores, ranks


def _fmt(value):
    if value is None:
        return "n/a"
    return f"{value:.4f}"


def _header(command, config):
    lines = [f"# stylemetric {command}"]
    for key, value in config.items():
        if value is None:
            text = "-"
        elif isinstance(value, list):
            text = ", ".join(str(v) for v in value)
        else:
            text = str(value)
        lines.append(f"# {key}: {text}")
    return lines


def _table(rows):
    """Align a list of string tuples into fixed-width columns."""
    if not rows:
        return []
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]


def _render_rate_block(name, block):
    lines = [
        f"{name}  evaluated {block['evaluated']}  satisfied {block['satisfied']}"
        f"  skipped {block['skipped']}  rate {_fmt(block['rate'])}"
    ]
    if block["per_style"]:
        lines.append(f"per-style {name}:")
        rows = [
            (
                f"  {style}",
                f"evaluated {stats['evaluated']}",
                f"satisfied {stats['satisfied']}",
                f"rate {_fmt(stats['rate'])}",
            )
            for style, stats in block["per_style"].items()
        ]
        lines.extend(_table(rows))
    return lines


def render_text(command, report):
    lines = _header(command, report.get("config", {}))
    if command == "build-index":
        stats = report["stats"]
        lines.append(
            f"styles {stats['styles']}  captions {stats['captions']}"
            f"  images {stats['images']}  tokens {stats['tokens']}  vocab {stats['vocab']}"
        )
        lines.append("per-style captions:")
        lines.extend(_table([(f"  {s}", str(c)) for s, c in stats["per_style"].items()]))
        per_order = "  ".join(f"{n}={c}" for n, c in report["ngrams_per_order"].items())
        lines.append(f"distinct n-grams per order: {per_order}")
        lines.append("build log:")
        lines.extend(f"  {entry}" for entry in report["build_log"])
    elif command == "score":
        rows = [("row", "style", "score", "caption")]
        for r in report["rows"]:
            rows.append((str(r["row"]), r.get("style") or "-", _fmt(r["score"]), r["caption"]))
        lines.extend(_table(rows))
        lines.append(
            f"aggregate {_fmt(report['aggregate'])}"
            f" ({report['aggregation']} over {report['count']} rows)"
        )
    elif command == "eval-gt":
        lines.append(f"captions {report['captions']}  styles-in-index {report['styles_in_index']}")
        for name in ("onlystyle", "stylecider"):
            if report.get(name) is not None:
                lines.extend(_render_rate_block(name, report[name]))
    elif command == "eval-models":
        rows = [("model", "rows", "matched", "bleu1", "bleu4", "cider", "stylecider", "onlystyle")]
        for m in report["models"]:
            rows.append(
                (
                    m["model"],
                    str(m["rows"]),
                    str(m["matched"]),
                    _fmt(m["bleu1"]),
                    _fmt(m["bleu4"]),
                    _fmt(m["cider"]),
                    _fmt(m["stylecider"]),
                    _fmt(m["onlystyle"]),
                )
            )
        lines.extend(_table(rows))
        lines.append(f"references {report['references']}")
    elif command == "rank":
        rows = [("rank", "style", "onlystyle")]
        for i, (style, score) in enumerate(report["ranking"], 1):
            rows.append((str(i), style, _fmt(score)))
        lines.extend(_table(rows))
        if report.get("target_rank") is not None:
            lines.append(
                f"target {report['config']['target']} rank {report['target_rank']}"
                f" of {report['styles']}"
            )
    elif command == "cng":
        rows = [("term", *report["styles"])]
        for term, scores in zip(report["terms"], report["scores"]):
            rows.append((term, *[_fmt(v) for v in scores]))
        lines.extend(_table(rows))
    elif command == "corr":
        lines.append(f"n {report['n']}")
        for key in ("pearson", "spearman"):
            value = report[key]
            text = "undefined (zero variance)" if value is None else f"{value:.4f}"
            lines.append(f"{key} {text}")
    else:
        lines.append(json.dumps(report, sort_keys=True))
    return "\n".join(lines) + "\n"


def _emit(args, command, report):
    if getattr(args, "json", False):
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        text = render_text(command, report)
    out_path = getattr(args, "out", None) or getattr(args, "report_out", None)
    if command == "build-index":
        out_path = args.report_out
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0
    try:
        endpoint, payload = _request_payload(args)
        report = _call(getattr(args, "server", None), endpoint, payload)
        _emit(args, args.command, report)
    except StylemetricError as e:
        print(f"{ERROR_PREFIX}{e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"{ERROR_PREFIX}{e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
