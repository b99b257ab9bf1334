# Licensed under a 3-clause BSD style license - see LICENSE.rst
import copy
import json

import numpy as np

__all__ = ['Param', 'Manipulation', 'NoManipulation', 'ManipulationSpec',
           'KINDS', 'DEFAULT_REGION_FRACTION', 'parse_chain', 'chain_name',
           'load_spec_file', 'make_rng', 'round_half_up']

DEFAULT_REGION_FRACTION = 0.25

# Spec kind -> manipulation component class name
KINDS = {'none': 'NoManipulation',
         'jpeg': 'JpegRecompress',
         'resize': 'Resize',
         'copy_move': 'CopyMove',
         'splice': 'Splice'}

# Spec fields each kind requires; every other parameter must be absent
REQUIRED = {'none': (),
            'jpeg': ('quality',),
            'resize': ('scale',),
            'copy_move': ('region_fraction',),
            'splice': ('region_fraction',)}
OPTIONAL = {'splice': ('donor_id',)}
PARAMETERS = ('quality', 'scale', 'region_fraction', 'donor_id')

MAX_SEED = 2 ** 64


def round_half_up(val):
    return int(np.floor(val + 0.5))


def make_rng(seed):
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


class Param(dict):
    """Manipulation parameter.  Inherits from dict but adds attribute access
    for convenience."""
    def __init__(self, owner_name, name, val, min=None, max=None):
        dict.__init__(self)
        self.owner_name = owner_name
        self.name = name
        self.min = min
        self.max = max
        self.val = val

    def __setattr__(self, attr, val):
        if attr == 'val':
            if self.min is not None and val < self.min:
                raise ValueError('{}: {} below minimum {}'.format(self.full_name, val, self.min))
            if self.max is not None and val > self.max:
                raise ValueError('{}: {} above maximum {}'.format(self.full_name, val, self.max))
        dict.__setitem__(self, attr, val)

    def __getattr__(self, attr):
        try:
            return dict.__getitem__(self, attr)
        except KeyError:
            raise AttributeError(attr)

    @property
    def full_name(self):
        return self.owner_name + '__' + self.name


class Manipulation(object):
    """Manipulation component base class.

    Subclasses declare their parameters with ``add_par`` and implement
    ``apply(img, seed, donor=None)`` returning a new ``RasterImage``.
    Parameter values are readable as attributes.
    """
    kind = None
    tamper = False

    def __init__(self):
        # __getattr__ below needs `pars_dict`, so set it through object first
        super(Manipulation, self).__setattr__('pars', [])
        super(Manipulation, self).__setattr__('pars_dict', {})

    def add_par(self, name, val, min=None, max=None):
        param = Param(self.kind, name, val, min=min, max=max)
        self.pars_dict[name] = param
        self.pars.append(param)

    def __getattr__(self, attr):
        pars_dict = self.__dict__.get('pars_dict', {})
        if attr in pars_dict:
            return pars_dict[attr].val
        return super(Manipulation, self).__getattribute__(attr)

    def __setattr__(self, attr, val):
        if attr in self.__dict__.get('pars_dict', {}):
            self.pars_dict[attr].val = val
        else:
            super(Manipulation, self).__setattr__(attr, val)

    @property
    def parvals(self):
        return {par.name: par.val for par in self.pars}

    def apply(self, img, seed=0, donor=None):
        raise NotImplementedError

    def __str__(self):
        return self.kind


class NoManipulation(Manipulation):
    """Identity: the query is the reference itself"""
    kind = 'none'

    def apply(self, img, seed=0, donor=None):
        return img


class ManipulationSpec(object):
    """Declarative description of one manipulation.

    Parameters
    ----------
    kind : str
        'none', 'jpeg', 'resize', 'copy_move' or 'splice'
    quality : int
        JPEG quality 1..100 (jpeg only)
    scale : float
        scale factor > 0 (resize only)
    region_fraction : float
        rectangle side as a fraction of the image side (copy_move, splice)
    seed : int
        64-bit seed that determines every random choice
    donor_id : str
        id of the donor image (splice only, optional)
    """
    def __init__(self, kind, quality=None, scale=None, region_fraction=None,
                 seed=0, donor_id=None):
        if kind not in KINDS:
            raise ValueError('unknown manipulation kind {!r} (expected one of {})'
                             .format(kind, ', '.join(KINDS)))
        self.kind = kind
        self.quality = None if quality is None else int(quality)
        self.scale = None if scale is None else float(scale)
        self.region_fraction = None if region_fraction is None else float(region_fraction)
        self.donor_id = donor_id
        self.seed = int(seed)

        allowed = REQUIRED[kind] + OPTIONAL.get(kind, ())
        for name in PARAMETERS:
            val = getattr(self, name)
            if name in REQUIRED[kind] and val is None:
                raise ValueError('{} manipulation requires {}'.format(kind, name))
            if name not in allowed and val is not None:
                raise ValueError('{} manipulation does not take {}'.format(kind, name))
        if not 0 <= self.seed < MAX_SEED:
            raise ValueError('seed must be a 64-bit unsigned integer')
        # Range checks happen in the component parameters
        self.make()

    @classmethod
    def default(cls, kind, quality=70, scale=0.5,
                region_fraction=DEFAULT_REGION_FRACTION, seed=0):
        """Spec of ``kind`` taking only the parameters that kind needs"""
        kwargs = dict(quality=quality, scale=scale, region_fraction=region_fraction)
        if kind not in REQUIRED:
            raise ValueError('unknown manipulation kind {!r}'.format(kind))
        return cls(kind, seed=seed, **{name: kwargs[name] for name in REQUIRED[kind]})

    @property
    def name(self):
        """Short label used in query ids and report rows"""
        if self.kind == 'jpeg':
            return 'jpeg{}'.format(self.quality)
        if self.kind == 'resize':
            return 'resize{:g}'.format(self.scale)
        return self.kind

    @property
    def tamper(self):
        return self.make().tamper

    def make(self):
        """Instantiate the manipulation component for this spec"""
        from .. import manipulation
        ManipulationClass = getattr(manipulation, KINDS[self.kind])
        kwargs = {name: getattr(self, name) for name in REQUIRED[self.kind]}
        return ManipulationClass(**kwargs)

    def apply(self, img, donor=None):
        return self.make().apply(img, seed=self.seed, donor=donor)

    def replace(self, **kwargs):
        new = copy.copy(self)
        for attr, val in kwargs.items():
            if not hasattr(new, attr):
                raise AttributeError(attr)
            setattr(new, attr, val)
        return ManipulationSpec(**new.to_dict())

    def to_dict(self):
        spec = dict(kind=self.kind, seed=self.seed)
        for name in PARAMETERS:
            if getattr(self, name) is not None:
                spec[name] = getattr(self, name)
        return spec

    @classmethod
    def from_dict(cls, spec):
        return cls(**{str(k): v for k, v in spec.items()})

    def __eq__(self, other):
        if not isinstance(other, ManipulationSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return 'ManipulationSpec({})'.format(
            ', '.join('{}={!r}'.format(k, v) for k, v in self.to_dict().items()))


def chain_name(chain):
    return '+'.join(spec.name for spec in chain)


def parse_chain(text, quality=70, scale=0.5, region_fraction=DEFAULT_REGION_FRACTION):
    """Parse ``'copy_move+jpeg'`` style chains into a list of specs using the
    given shared parameter values."""
    kinds = [kind.strip() for kind in text.split('+')]
    if not all(kinds):
        raise ValueError('empty manipulation in chain {!r}'.format(text))
    return [ManipulationSpec.default(kind, quality=quality, scale=scale,
                                     region_fraction=region_fraction)
            for kind in kinds]


def load_spec_file(filename):
    """Read a JSON list of manipulations.

    Each list item is either a spec dict or a list of spec dicts (a chain).
    """
    with open(filename, 'r') as fh:
        items = json.load(fh)
    if not isinstance(items, list):
        raise ValueError('{}: expected a JSON list of manipulation specs'.format(filename))
    chains = []
    for item in items:
        item = item if isinstance(item, list) else [item]
        chains.append([ManipulationSpec.from_dict(spec) for spec in item])
    return chains
