"""Command-line entry point: ``dmdforge <command> ...``.

Exit codes: 0 success, 1 usage or unexpected error, 2 configuration error,
3 stage or input failure.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .errors import ConfigError, DmdForgeError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2, 3


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
def cli(verbose):
    """Synthetic measurement-device VQA data generation and evaluation."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# dictionaries

@cli.group("dict")
def dict_group():
    """Value dictionaries."""


@dict_group.command("gen")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--cap", default=10 ** 7, show_default=True, help="Maximum entry count.")
def dict_gen(spec_path, out, cap):
    """Enumerate a dictionary from a range or pattern spec JSON."""
    from .dictionaries import generate_from_spec, save_dictionary

    d = generate_from_spec(json.loads(Path(spec_path).read_text(encoding="utf-8")), cap=cap)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_dictionary(d, out)
    click.echo(f"[dict] {len(d)} entries -> {out}")


# displays

@cli.group("display")
def display_group():
    """Display templates and synthetic display images."""


@display_group.command("gen")
@click.option("--template", required=True, type=click.Path(exists=True, dir_okay=False), help="Template metadata JSON.")
@click.option("--dicts", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--count", required=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--fonts", type=click.Path(exists=True, file_okay=False), help="Directory of TTF/OTF fonts.")
def display_gen(template, dicts, count, seed, out, fonts):
    """Draw dictionary values into a template's ROIs."""
    from .dictionaries import load_dictionary_dir
    from .display import generate_display_images, load_template, read_display_index, save_displays
    from .fonts import resolve_font_set

    tpl = load_template(template)
    out_dir = Path(out)
    start = 0
    if (out_dir / "displays.csv").exists():
        start = sum(1 for r in read_display_index(out_dir) if r["template"] == tpl.name)
    displays = generate_display_images(tpl, load_dictionary_dir(dicts), count, np.random.default_rng(seed),
                                       resolve_font_set(fonts))
    save_displays(displays, tpl, out_dir, start_index=start)
    click.echo(f"[display] {len(displays)} images from {tpl.name} -> {out_dir}")


@display_group.command("rois")
@click.option("--template", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--rois", "rois_json", help='Non-interactive ROIs as JSON: [{"x":..,"y":..,"w":..,"h":..}, ...].')
def display_rois(template, rois_json):
    """Define ROIs once per template and store them in its metadata."""
    from .display import RegionOfInterest, ScriptedPicker, define_rois, load_template, matplotlib_picker

    tpl = load_template(template)
    picker = matplotlib_picker
    if rois_json:
        picker = ScriptedPicker([RegionOfInterest.from_json(d) for d in json.loads(rois_json)])
    rois = define_rois(tpl, picker, template)
    click.echo(f"[display] {len(rois)} ROIs for {tpl.name}")


# rendering

@cli.command("render")
@click.option("--devices", required=True, type=click.Path(exists=True, dir_okay=False), help="Device registry JSON.")
@click.option("--displays", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--count", required=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--backend", type=click.Choice(["blender", "mock"]), default="blender", show_default=True)
@click.option("--workers", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--exclude", multiple=True, help="Device name to skip; repeatable.")
@click.option("--ranges", "ranges_path", type=click.Path(exists=True, dir_okay=False), help="Render ranges JSON.")
@click.option("--palette", type=click.Path(exists=True, dir_okay=False), help="Body colour palette JSON.")
@click.option("--figures", is_flag=True, help="Also write a parameter histogram PNG.")
def render_cmd(devices, displays, count, seed, out, backend, workers, exclude, ranges_path, palette, figures):
    """Render device images, depth maps and masks."""
    from .pipeline import load_palette
    from .render import BatchRenderer, RenderRanges, load_device_registry, load_display_entries, make_backend

    ranges = RenderRanges()
    if ranges_path:
        try:
            ranges = RenderRanges.from_dict(json.loads(Path(ranges_path).read_text(encoding="utf-8")))
        except (TypeError, ValueError) as exc:
            raise ConfigError("ranges", str(exc)) from None
    registry = Path(devices).resolve()
    devs = load_device_registry(registry)
    renderer = BatchRenderer(devs, load_display_entries(displays), ranges, out, backend=make_backend(backend),
                             base_dir=registry.parent, palette=load_palette(palette), exclude=exclude)
    records = renderer.run(count, seed, workers)
    click.echo(f"[render] {len(records)} renders ({sum(r.blur for r in records)} blurred) -> {out}")
    if figures:
        from .plotting import plot_render_histograms

        path = plot_render_histograms(records, Path(out) / "render_parameters.png")
        click.echo(f"[render] figure -> {path}")


# composition

@cli.command("compose")
@click.option("--fg", required=True, type=click.Path(exists=True, file_okay=False), help="Render output directory.")
@click.option("--bg", required=True, type=click.Path(exists=True, file_okay=False), help="Background directory.")
@click.option("--n", "n", required=True, type=click.IntRange(min=1))
@click.option("--scorer", type=click.Choice(["fopa", "random"]), default="fopa", show_default=True)
@click.option("--workers", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--harmonize", is_flag=True, help="Run the harmonization hook (needs an adapter).")
@click.option("--min-fraction", default=0.10, show_default=True, type=click.FloatRange(0, 1))
@click.option("--image-format", type=click.Choice(["png", "jpg"]), default="png", show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def compose_cmd(fg, bg, n, scorer, workers, seed, harmonize, min_fraction, image_format, out):
    """Paste rendered devices onto backgrounds and write the manifest."""
    from .compose import DatasetComposer, curate_backgrounds, load_foregrounds, make_scorer

    composer = DatasetComposer(load_foregrounds(fg), curate_backgrounds(bg), make_scorer(scorer), out,
                               min_fraction=min_fraction, harmonize=harmonize, image_ext=f".{image_format}")
    records = composer.run(n, seed, workers)
    click.echo(f"[compose] {len(records)} composites -> {out}")


# labelling

@cli.command("label")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--records", type=click.Path(exists=True, dir_okay=False), help="render_records.csv")
@click.option("--annotations", type=click.Path(exists=True, dir_okay=False), help="Real-image annotation CSV.")
@click.option("--format", "fmt", type=click.Choice(["full", "one_word"]), default="full", show_default=True)
@click.option("--seed", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--pairs-per-image", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def label_cmd(manifest, records, annotations, fmt, seed, pairs_per_image, out):
    """Write VQA pairs as JSON lines."""
    from .compose import read_manifest
    from .labeling import annotate_real, label_annotations, label_dataset, write_pairs
    from .render import read_records

    if annotations:
        pairs = label_annotations(annotate_real(annotations), fmt, seed, pairs_per_image)
    elif manifest and records:
        pairs = label_dataset(read_manifest(manifest), read_records(records), fmt, seed, pairs_per_image)
    else:
        raise click.UsageError("give --manifest and --records, or --annotations")
    write_pairs(pairs, out)
    click.echo(f"[label] {len(pairs)} {fmt} pairs -> {out}")


# evaluation

@cli.command("eval")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False), help="Predictions CSV.")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Report JSON path.")
@click.option("--tau", default=0.5, show_default=True, type=click.FloatRange(0, 1))
@click.option("--multi-truth", is_flag=True, help="Split ground_truth on '|' and score the best match.")
@click.option("--figures", is_flag=True, help="Write per-device CSV and bar chart next to the report.")
def eval_cmd(pred, out, tau, multi_truth, figures):
    """Score predictions with ANLS and one-word accuracies."""
    from .evaluation import run_benchmark, write_per_device_csv

    report = run_benchmark(pred, out, tau=tau, multi_truth=multi_truth)

    def fmt(v):
        return "n/a" if v is None else f"{100 * v:.2f}"

    click.echo(f"[eval] n={report.n_items} anls={fmt(report.anls)} numeric={fmt(report.numeric_accuracy)} "
               f"unit={fmt(report.unit_accuracy)} word={fmt(report.word_level_accuracy)} -> {out}")
    if figures:
        from .plotting import plot_per_device

        base = Path(out).with_suffix("")
        csv_path = base.parent / f"{base.name}_per_device.csv"
        png_path = base.parent / f"{base.name}_per_device.png"
        write_per_device_csv(report, csv_path)
        plot_per_device(report, png_path)
        click.echo(f"[eval] figures -> {csv_path}, {png_path}")


# full pipeline

@cli.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--stages", default="all", show_default=True, help="Comma list of dict,display,render,compose,label.")
@click.option("--resume", is_flag=True, help="Skip stages whose outputs match the current config.")
def run_cmd(config_path, stages, resume):
    """Run the configured pipeline stages in order."""
    from .config import validate_config
    from .pipeline import parse_stages, run_pipeline

    cfg = validate_config(config_path)
    try:
        selected = parse_stages(stages)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--stages") from None
    run_pipeline(cfg, selected, resume=resume, echo=click.echo)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="dmdforge", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code if exc.exit_code != 2 else EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except (DmdForgeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
