# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Detector evaluation: Accuracy(fake), average precision, FAR / FRR sweeps
over every integer threshold and EER threshold selection.

The fake score of a query is its minimum Hamming distance to the reference
database (larger means more likely fake).
"""
import json
import logging
from collections import OrderedDict

import numpy as np
from astropy.table import Table
from sklearn.metrics import average_precision_score

from .matcher import (Judgment, MAX_THRESHOLD, FAKE, REAL, EmptyDatabase,
                      batch_min_distance_arrays)
from .robust_hash import N_BITS, hash_files

__all__ = ['NoFakeQueries', 'DegenerateLabels', 'EmptyInput', 'EvalReport',
           'accuracy_fake', 'average_precision', 'far_frr_sweep',
           'eer_threshold', 'query_distances', 'evaluate', 'CALIBRATIONS']

logger = logging.getLogger('rohash')

CALIBRATIONS = ('pooled', 'per-row')


class NoFakeQueries(ValueError):
    pass


class DegenerateLabels(ValueError):
    pass


class EmptyInput(ValueError):
    pass


def _is_fake(labels):
    labels = np.asarray(labels)
    if labels.dtype == bool:
        return labels
    bad = set(labels.tolist()) - {REAL, FAKE}
    if bad:
        raise ValueError('labels must be {!r} or {!r}, got {}'.format(
            REAL, FAKE, sorted(bad)))
    return labels == FAKE


def accuracy_fake(judgments, labels):
    """N_tn / N_Qf: fraction of fake-labeled queries judged fake.

    Parameters
    ----------
    judgments : sequence of Judgment
    labels : sequence of 'real' / 'fake' (or bool, True = fake)

    Returns
    -------
    float
    """
    is_fake = _is_fake(labels)
    judgments = list(judgments)
    if len(judgments) != len(is_fake):
        raise ValueError('need one label per judgment')
    n_qf = int(is_fake.sum())
    if n_qf == 0:
        raise NoFakeQueries('no fake-labeled queries')
    n_tn = sum(1 for j, fake in zip(judgments, is_fake) if fake and j.is_fake)
    return n_tn / n_qf


def average_precision(scores, labels):
    """Average precision of ranking fakes (positives) by descending score.

    Queries with equal scores form one group: precision is taken after the
    whole group and credited to each positive in it, so the result does
    not depend on input order.

    Parameters
    ----------
    scores : sequence of float
    labels : sequence of 'real' / 'fake' (or bool, True = fake)

    Returns
    -------
    float
    """
    is_fake = _is_fake(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != is_fake.shape:
        raise ValueError('need one label per score')
    if is_fake.all() or not is_fake.any():
        raise DegenerateLabels('average precision needs both fake and real queries')
    return float(average_precision_score(is_fake, scores))


def far_frr_sweep(real_dists, fake_dists):
    """False accept / false reject rates for every threshold d in 0..121.

    FRR(d) is the fraction of real queries with distance >= d and FAR(d)
    the fraction of fake queries with distance < d.

    Returns
    -------
    astropy.table.Table
        columns d, far, frr, n_false_accept, n_false_reject; meta n_real, n_fake
    """
    real_dists = np.asarray(real_dists, dtype=np.int64).ravel()
    fake_dists = np.asarray(fake_dists, dtype=np.int64).ravel()
    if real_dists.size == 0 or fake_dists.size == 0:
        raise EmptyInput('need at least one real and one fake distance')
    for dists in (real_dists, fake_dists):
        if dists.min() < 0 or dists.max() > N_BITS:
            raise ValueError('distances must be in 0..{}'.format(N_BITS))

    n_real, n_fake = real_dists.size, fake_dists.size
    # Counts below threshold d, for d = 0 .. MAX_THRESHOLD
    real_below = np.concatenate([[0], np.cumsum(np.bincount(real_dists, minlength=N_BITS + 1))])
    fake_below = np.concatenate([[0], np.cumsum(np.bincount(fake_dists, minlength=N_BITS + 1))])
    n_false_accept = fake_below
    n_false_reject = n_real - real_below

    curve = Table()
    curve['d'] = np.arange(MAX_THRESHOLD + 1)
    curve['far'] = n_false_accept / n_fake
    curve['frr'] = n_false_reject / n_real
    curve['n_false_accept'] = n_false_accept
    curve['n_false_reject'] = n_false_reject
    curve.meta['n_real'] = n_real
    curve.meta['n_fake'] = n_fake
    return curve


def eer_threshold(curve):
    """Threshold d minimising |FAR(d) - FRR(d)|, ties to the smaller d.

    The comparison uses the integer counts,
    ``|n_fa * n_real - n_fr * n_fake|``, so it is exact.
    """
    n_fa = np.asarray(curve['n_false_accept'], dtype=np.int64)
    n_fr = np.asarray(curve['n_false_reject'], dtype=np.int64)
    gap = np.abs(n_fa * curve.meta['n_real'] - n_fr * curve.meta['n_fake'])
    # argmin returns the first (smallest d) of equal minima
    return int(curve['d'][np.argmin(gap)])


class EvalReport(object):
    """Evaluation of one query set at one operating threshold.

    Attributes
    ----------
    ap : float
        average precision of the min-distance fake score
    acc_fake : float
        N_tn / N_Qf
    acc_real : float
        fraction of real queries judged real
    eer_threshold : int
        EER threshold of this query set
    threshold_used : int
        threshold the judgments were made with
    calibration : str
        'pooled', 'per-row' or 'fixed'
    curve : astropy.table.Table
        FAR / FRR sweep
    counts : dict
        N_Qf, N_tn, N_real, N_real_accepted
    rows : OrderedDict
        manipulation name -> EvalReport
    """
    def __init__(self, ap, eer_threshold, threshold_used, calibration, curve,
                 counts, name='all', config=None, rows=None, judgments=None):
        self.name = name
        self.ap = float(ap)
        self.eer_threshold = int(eer_threshold)
        self.threshold_used = int(threshold_used)
        self.calibration = calibration
        self.curve = curve
        self.counts = OrderedDict((key, int(counts[key]))
                                  for key in ('N_Qf', 'N_tn', 'N_real', 'N_real_accepted'))
        self.config = config
        self.rows = rows if rows is not None else OrderedDict()
        self.judgments = judgments or []

    @property
    def acc_fake(self):
        return self.counts['N_tn'] / self.counts['N_Qf']

    @property
    def acc_real(self):
        if self.counts['N_real'] == 0:
            return float('nan')
        return self.counts['N_real_accepted'] / self.counts['N_real']

    def to_dict(self):
        out = OrderedDict()
        out['name'] = self.name
        out['ap'] = self.ap
        out['acc_fake'] = self.acc_fake
        out['acc_real'] = self.acc_real
        out['eer_threshold'] = self.eer_threshold
        out['threshold_used'] = self.threshold_used
        out['calibration'] = self.calibration
        out['counts'] = dict(self.counts)
        out['curve'] = [OrderedDict([('d', int(row['d'])),
                                     ('far', float(row['far'])),
                                     ('frr', float(row['frr']))])
                        for row in self.curve]
        if self.config is not None:
            out['config'] = dict(self.config)
        if self.rows:
            out['rows'] = OrderedDict((name, row.to_dict()) for name, row in self.rows.items())
        return out

    def to_json(self, **kwargs):
        kwargs.setdefault('indent', 1)
        return json.dumps(self.to_dict(), **kwargs)

    def write_curve(self, filename):
        self.curve.write(str(filename), format='ascii.csv', overwrite=True)

    def summary(self):
        """Table-style lines: one for the pooled set and one per row"""
        fmt = '{:<24s} AP {:.4f}  Accuracy(fake) {:.4f}  d={} ({})'
        lines = [fmt.format(self.name, self.ap, self.acc_fake, self.threshold_used,
                            self.calibration)]
        for row in self.rows.values():
            lines.append(fmt.format('  ' + row.name, row.ap, row.acc_fake,
                                    row.threshold_used, row.calibration))
        return lines


def query_distances(manifest, db, threads=1):
    """Hash every manifest query and find its nearest reference.

    Returns
    -------
    tuple
        (int64 distances, nearest reference ids) in manifest order
    """
    if len(db) == 0:
        raise EmptyDatabase('reference database is empty')
    paths = manifest.paths()
    hashes = hash_files(paths, threads=threads)
    dists, index = batch_min_distance_arrays(hashes, db, threads=threads)
    ids = db.ids
    return dists, [ids[pos] for pos in index]


def _report(dists, nearest, manifest, threshold, calibration, name, config=None):
    is_fake = _is_fake(manifest.labels)
    if not is_fake.any():
        raise NoFakeQueries('{}: no fake-labeled queries'.format(name))
    curve = far_frr_sweep(dists[~is_fake], dists[is_fake])
    eer = eer_threshold(curve)
    if threshold is None:
        threshold = eer
    judgments = [Judgment(query_id, dist, nearest_id, threshold)
                 for query_id, dist, nearest_id in zip(manifest.query_ids, dists, nearest)]
    counts = dict(N_Qf=is_fake.sum(),
                  N_tn=sum(j.is_fake for j, fake in zip(judgments, is_fake) if fake),
                  N_real=(~is_fake).sum(),
                  N_real_accepted=sum(not j.is_fake for j, fake in zip(judgments, is_fake)
                                      if not fake))
    return EvalReport(average_precision(dists, is_fake), eer, threshold, calibration,
                      curve, counts, name=name, config=config, judgments=judgments)


def evaluate(manifest, db, d=None, calibration='pooled', threads=1, config=None):
    """Judge every manifest query against ``db`` and score the detector.

    Parameters
    ----------
    manifest : CorpusManifest
    db : ReferenceDb
    d : int, None
        fixed threshold; None selects the EER threshold
    calibration : str
        with d=None, 'pooled' uses the EER threshold of all queries for every
        manipulation row and 'per-row' lets each row calibrate its own
    threads : int
    config : dict, None
        run configuration to embed in the report

    Returns
    -------
    EvalReport
        pooled report with one entry in ``rows`` per manipulation
    """
    if calibration not in CALIBRATIONS:
        raise ValueError('calibration must be one of {}, got {!r}'.format(
            CALIBRATIONS, calibration))
    if d is not None:
        d = int(d)
        if not 0 <= d <= MAX_THRESHOLD:
            raise ValueError('threshold d must be in 0..{}, got {}'.format(MAX_THRESHOLD, d))
        calibration = 'fixed'
    if manifest.n_fake == 0:
        raise NoFakeQueries('manifest has no fake-labeled queries')

    dists, nearest = query_distances(manifest, db, threads=threads)
    report = _report(dists, nearest, manifest, d, calibration, 'all', config=config)
    logger.info('EER threshold {} over {} queries; using d={} ({} calibration)'.format(
        report.eer_threshold, len(manifest), report.threshold_used, calibration))

    names = manifest.manipulations
    manipulations = np.array([row.manipulation for row in manifest])
    is_real = np.array([label == REAL for label in manifest.labels])
    for name in names:
        mask = is_real | (manipulations == name)
        subset = manifest.select(name)
        row_d = None if calibration == 'per-row' else report.threshold_used
        row = _report(dists[mask], [x for x, m in zip(nearest, mask) if m], subset,
                      row_d, calibration, name)
        report.rows[name] = row
        logger.info('{}: AP {:.4f} Accuracy(fake) {:.4f} at d={}'.format(
            name, row.ap, row.acc_fake, row.threshold_used))
    return report
