# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Query corpora for robustness experiments: seeded synthetic reference images,
manipulated query sets and the CSV manifest that pairs every query with the
reference it derives from.
"""
import json
import logging
import os
from collections import OrderedDict, namedtuple
from multiprocessing.pool import ThreadPool
from pathlib import Path

import numpy as np
from astropy.io import ascii
from astropy.table import Table
from PIL import Image, ImageDraw

from .files import files, query_ids
from .imageprep import RasterImage, encode_jpeg, encode_png, read_image
from .manipulation import ManipulationSpec, DonorTooSmall, InvalidScale, chain_name
from .robust_hash import ParseError

__all__ = ['MissingFile', 'ManifestRow', 'CorpusManifest', 'Experiment',
           'read_manifest', 'gen_synthetic', 'build_experiment',
           'write_corpus', 'write_images', 'load_corpus', 'LABELS',
           'QUERY_QUALITY']

logger = logging.getLogger('rohash')

LABELS = ('real', 'fake')
MANIFEST_COLUMNS = ('query_id', 'file_path', 'label', 'origin_id')
OPTIONAL_COLUMNS = ('manipulation',)

# JPEG quality applied to every query image, real or fake
QUERY_QUALITY = 80

SYNTH_SIZE = 256
N_SHAPES = (5, 10)


class MissingFile(FileNotFoundError):
    pass


ManifestRow = namedtuple('ManifestRow', MANIFEST_COLUMNS + OPTIONAL_COLUMNS,
                         defaults=('',))

# Encoded query files keyed by file name, their manifest and the fully
# resolved manipulation chain (seeds, donor ids) of every fake query
Experiment = namedtuple('Experiment', ['payloads', 'manifest', 'item_specs'])


def _check_row(row):
    for name in ('query_id', 'file_path', 'origin_id'):
        if not getattr(row, name):
            raise ValueError('manifest row {!r} has an empty {}'.format(row.query_id, name))
    if row.label not in LABELS:
        raise ValueError('manifest row {!r}: label must be real or fake, got {!r}'
                         .format(row.query_id, row.label))


class CorpusManifest(object):
    """Rows of ``(query_id, file_path, label, origin_id[, manipulation])``.

    ``file_path`` values are stored as written and resolved against
    ``base_dir`` (the manifest directory when read from disk).

    Parameters
    ----------
    rows : iterable of ManifestRow or tuple, None
    base_dir : str, Path, None
        directory relative file paths are resolved against (default cwd)
    """
    def __init__(self, rows=None, base_dir=None):
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.rows = []
        self._ids = set()
        for row in (rows or ()):
            self.add(*row)

    def add(self, query_id, file_path, label, origin_id, manipulation=''):
        row = ManifestRow(str(query_id), str(file_path), str(label), str(origin_id),
                          manipulation or '')
        _check_row(row)
        if row.query_id in self._ids:
            raise ValueError('duplicate query id {!r}'.format(row.query_id))
        self._ids.add(row.query_id)
        self.rows.append(row)
        return row

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, item):
        return self.rows[item]

    @property
    def query_ids(self):
        return [row.query_id for row in self.rows]

    @property
    def labels(self):
        return [row.label for row in self.rows]

    @property
    def n_real(self):
        return sum(1 for row in self.rows if row.label == 'real')

    @property
    def n_fake(self):
        return sum(1 for row in self.rows if row.label == 'fake')

    @property
    def manipulations(self):
        """Distinct manipulation names of the fake rows in first-seen order"""
        names = OrderedDict()
        for row in self.rows:
            if row.label == 'fake' and row.manipulation:
                names[row.manipulation] = None
        return list(names)

    def select(self, manipulation):
        """All real rows plus the fake rows of ``manipulation``"""
        return CorpusManifest([row for row in self.rows
                               if row.label == 'real' or row.manipulation == manipulation],
                              base_dir=self.base_dir)

    def resolve(self, row):
        """Absolute path of ``row``; ``MissingFile`` if it does not exist"""
        path = Path(row.file_path)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        if not path.exists():
            raise MissingFile('query {}: file not found: {}'.format(row.query_id, path))
        return path

    def paths(self):
        return [self.resolve(row) for row in self.rows]

    def to_table(self):
        names = MANIFEST_COLUMNS
        if any(row.manipulation for row in self.rows):
            names = names + OPTIONAL_COLUMNS
        if not self.rows:
            return Table(names=names, dtype=[str] * len(names))
        return Table(rows=[tuple(row)[:len(names)] for row in self.rows], names=names)

    def write(self, filename):
        """Write the manifest as CSV; relative paths are rewritten relative to
        the new manifest directory."""
        filename = Path(filename)
        out = CorpusManifest(base_dir=filename.parent)
        for row in self.rows:
            file_path = row.file_path
            if not Path(file_path).is_absolute() and self.base_dir is not None:
                file_path = os.path.relpath(self.base_dir / file_path, filename.parent)
            out.add(*row._replace(file_path=Path(file_path).as_posix()))
        out.to_table().write(str(filename), format='ascii.csv', overwrite=True)
        logger.info('Wrote manifest with {} rows ({} real, {} fake) to {}'
                    .format(len(out), out.n_real, out.n_fake, filename))

    @classmethod
    def read(cls, filename):
        return read_manifest(filename)

    def __repr__(self):
        return '<CorpusManifest {} real, {} fake>'.format(self.n_real, self.n_fake)


def _column_strings(table, name):
    col = table[name]
    if getattr(col, 'mask', None) is not None:
        col = col.filled('')
    return [str(val) for val in col]


def read_manifest(filename):
    """Read a manifest CSV with header ``query_id,file_path,label,origin_id``
    and an optional ``manipulation`` column."""
    filename = Path(filename)
    if not filename.exists():
        raise MissingFile('manifest not found: {}'.format(filename))
    try:
        table = Table.read(str(filename), format='ascii.csv',
                           converters={'*': [ascii.convert_numpy(str)]})
    except Exception as err:
        raise ParseError('{}: cannot read manifest: {}'.format(filename, err))
    missing = [name for name in MANIFEST_COLUMNS if name not in table.colnames]
    if missing:
        raise ParseError('{}: manifest is missing column(s) {}'.format(filename, ', '.join(missing)))

    names = [name for name in MANIFEST_COLUMNS + OPTIONAL_COLUMNS if name in table.colnames]
    columns = [_column_strings(table, name) for name in names]
    manifest = CorpusManifest(base_dir=filename.parent)
    # Line 1 is the header
    for lineno, vals in enumerate(zip(*columns), 2):
        try:
            manifest.add(*vals)
        except ValueError as err:
            raise ParseError('{} line {}: {}'.format(filename, lineno, err))
    logger.debug('Read manifest {} ({} rows)'.format(filename, len(manifest)))
    return manifest


def _child_rng(*entropy):
    return np.random.default_rng(np.random.SeedSequence([int(x) for x in entropy]))


def _child_seed(*entropy):
    return int(np.random.SeedSequence([int(x) for x in entropy])
               .generate_state(1, dtype=np.uint64)[0])


def _background(rng, size):
    """Per-channel linear ramp plus a low-frequency cosine"""
    yy, xx = np.mgrid[0:size, 0:size] / float(size)
    chans = []
    for _ in range(3):
        base = rng.uniform(40, 215)
        gx, gy = rng.uniform(-60, 60, size=2)
        amp = rng.uniform(10, 40)
        fx, fy = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        chans.append(base + gx * (xx - 0.5) + gy * (yy - 0.5)
                     + amp * np.cos(2 * np.pi * (fx * xx + fy * yy) + phase))
    return np.dstack(chans)


def _synthetic_image(rng, size=SYNTH_SIZE):
    canvas = _background(rng, size)
    for _ in range(int(rng.integers(N_SHAPES[0], N_SHAPES[1] + 1))):
        mask = Image.new('L', (size, size), 0)
        draw = ImageDraw.Draw(mask)
        w, h = rng.integers(size // 10, size // 2, size=2)
        x0 = int(rng.integers(-w // 4, size - 3 * w // 4))
        y0 = int(rng.integers(-h // 4, size - 3 * h // 4))
        box = (x0, y0, x0 + int(w), y0 + int(h))
        if rng.random() < 0.5:
            draw.rectangle(box, fill=255)
        else:
            draw.ellipse(box, fill=255)
        alpha = rng.uniform(0.55, 0.9) * (np.asarray(mask, dtype=np.float64) / 255.0)
        color = rng.uniform(0, 255, size=3)
        canvas = canvas * (1 - alpha[:, :, np.newaxis]) + color * alpha[:, :, np.newaxis]
    return RasterImage(np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8))


def _map(func, items, threads):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPool(min(threads, len(items))) as pool:
        return pool.map(func, items)


def gen_synthetic(n, seed, size=SYNTH_SIZE, threads=1):
    """Seeded synthetic reference corpus.

    Each image is a smooth non-linear colour background with 5 to 10
    alpha-blended rectangles and ellipses of random colour, position and
    size.  Image ``i`` depends only on ``(seed, i)``.

    Parameters
    ----------
    n : int
        number of images (>= 1)
    seed : int
    size : int
        image side in pixels (default 256)
    threads : int

    Returns
    -------
    tuple
        (list of RasterImage, CorpusManifest with one real row per image)
    """
    n = int(n)
    if n < 1:
        raise ValueError('need at least one image, got n={}'.format(n))
    images = _map(lambda i: _synthetic_image(_child_rng(seed, i), size), range(n), threads)
    manifest = CorpusManifest()
    for i in range(n):
        image_id = 'img{:04d}'.format(i)
        manifest.add(image_id, files['corpus_image'].format(image_id=image_id), 'real', image_id)
    logger.info('Generated {} synthetic {}x{} images (seed {})'.format(n, size, size, seed))
    return images, manifest


def _as_chain(item):
    if isinstance(item, ManipulationSpec):
        return [item]
    chain = list(item)
    if not chain or not all(isinstance(spec, ManipulationSpec) for spec in chain):
        raise TypeError('expected a ManipulationSpec or a non-empty sequence of them')
    return chain


def _resolve_chain(chain, ids, ref_index, chain_index, seed):
    """Per-item copy of ``chain`` with derived seeds and splice donors"""
    resolved = []
    for step, spec in enumerate(chain):
        item_seed = _child_seed(seed, spec.seed, ref_index, chain_index, step)
        donor_id = spec.donor_id
        if spec.kind == 'splice' and donor_id is None:
            others = [i for i in range(len(ids)) if i != ref_index] or [ref_index]
            rng = _child_rng(seed, ref_index, chain_index, step, 1)
            donor_id = ids[others[int(rng.integers(len(others)))]]
        resolved.append(spec.replace(seed=item_seed, donor_id=donor_id))
    return resolved


def build_experiment(corpus, specs, seed, query_quality=QUERY_QUALITY, threads=1):
    """Real and fake query images for every reference of ``corpus``.

    The real query of a reference is its JPEG recompression at
    ``query_quality``.  Each fake-producing item of ``specs`` (a spec or a
    chain of specs applied in order) gives one fake query: the manipulated
    image, then the same ``query_quality`` JPEG pass.

    Parameters
    ----------
    corpus : sequence of (str, RasterImage)
        reference ids and images
    specs : sequence of ManipulationSpec or sequences of ManipulationSpec
    seed : int
        experiment seed; per-item seeds derive from it
    query_quality : int
    threads : int

    Returns
    -------
    Experiment
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError('corpus is empty')
    ids = [str(image_id) for image_id, _ in corpus]
    images = dict(corpus)
    chains = [_as_chain(item) for item in specs]
    fake_chains = [(index, chain) for index, chain in enumerate(chains)
                   if any(spec.kind != 'none' for spec in chain)]

    def make_queries(ref_index):
        origin_id = ids[ref_index]
        img = images[origin_id]
        out = [('real', origin_id, '', None, encode_jpeg(img, query_quality))]
        for chain_index, chain in fake_chains:
            resolved = _resolve_chain(chain, ids, ref_index, chain_index, seed)
            fake = img
            name = chain_name(chain)
            for spec in resolved:
                donor = images[spec.donor_id] if spec.donor_id is not None else None
                try:
                    fake = spec.apply(fake, donor=donor)
                except (InvalidScale, DonorTooSmall) as err:
                    where = 'query {} ({})'.format(origin_id, name)
                    if spec.donor_id is not None:
                        where += ' with donor {}'.format(spec.donor_id)
                    raise type(err)('{}: {}'.format(where, err))
            logger.debug('{}: {}'.format(origin_id, [spec.to_dict() for spec in resolved]))
            out.append(('fake', origin_id, name, resolved,
                        encode_jpeg(fake, query_quality)))
        return out

    payloads = OrderedDict()
    item_specs = OrderedDict()
    manifest = CorpusManifest()
    for queries in _map(make_queries, range(len(ids)), threads):
        for label, origin_id, name, resolved, payload in queries:
            if label == 'real':
                query_id = query_ids['real'].format(origin_id=origin_id)
            else:
                query_id = query_ids['fake'].format(origin_id=origin_id, manipulation=name)
                item_specs[query_id] = [spec.to_dict() for spec in resolved]
            file_name = files['query_image'].format(query_id=query_id)
            payloads[file_name] = payload
            manifest.add(query_id, file_name, label, origin_id, name)

    logger.info('Built experiment: {} references, {} real and {} fake queries ({})'
                .format(len(ids), manifest.n_real, manifest.n_fake,
                        ', '.join(manifest.manipulations) or 'no manipulations'))
    return Experiment(payloads, manifest, item_specs)


def write_corpus(payloads, manifest, out_dir, item_specs=None):
    """Write encoded files, ``manifest.csv`` and optionally ``specs.json``
    into ``out_dir``.

    Parameters
    ----------
    payloads : dict
        file name -> encoded bytes
    manifest : CorpusManifest
        rows whose file paths are the ``payloads`` keys
    out_dir : str, Path
    item_specs : dict, None
        query id -> resolved manipulation chain (list of dicts)

    Returns
    -------
    Path
        manifest file name
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for file_name, data in payloads.items():
        (out_dir / file_name).write_bytes(data)
    manifest_file = out_dir / files['manifest']
    manifest.base_dir = out_dir
    manifest.write(manifest_file)
    if item_specs:
        with open(out_dir / files['item_specs'], 'w') as fh:
            json.dump(item_specs, fh, indent=1, sort_keys=True)
    return manifest_file


def write_images(images, manifest, out_dir):
    """Write ``gen_synthetic`` output as PNG files plus the manifest"""
    payloads = OrderedDict((row.file_path, encode_png(img))
                           for row, img in zip(manifest, images))
    return write_corpus(payloads, manifest, out_dir)


def load_corpus(manifest):
    """Decode the images of ``manifest`` into ``(query_id, RasterImage)`` pairs"""
    return [(row.query_id, read_image(manifest.resolve(row))) for row in manifest]
