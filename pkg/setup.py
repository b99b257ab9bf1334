# Licensed under a 3-clause BSD style license - see LICENSE.rst
from setuptools import setup

long_description = """
Rohash detects manipulated ("fake") images by comparing the robust hash of a
query image against a database of hashes of known real images:

* 120-bit robust image hash that survives JPEG recompression and rescaling
* Hamming-distance matching with a packed, numba-compiled batch search
* Seeded query forging (JPEG, resize, copy-move, splicing) and synthetic corpora
* Detector evaluation: Accuracy(fake), average precision, FAR / FRR and EER
* ``rohash`` command line for the whole enroll / forge / query / evaluate loop
"""

entry_points = {'console_scripts': 'rohash = rohash.cli:main'}

setup(name='rohash',
      use_scm_version={'fallback_version': '0.1.0'},
      setup_requires=['setuptools_scm'],
      description='Robust-hash fake image detection',
      long_description=long_description,
      license='BSD',
      zip_safe=False,
      platforms=['any'],
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: BSD License',
          'Topic :: Scientific/Engineering',
          'Topic :: Scientific/Engineering :: Image Recognition',
          'Programming Language :: Python :: 3',
          ],
      python_requires='>=3.10',
      install_requires=['numpy>=1.20', 'scipy', 'numba', 'astropy>=5.0',
                        'Pillow>=9.1', 'scikit-learn'],
      packages=['rohash', 'rohash.manipulation', 'rohash.tests'],
      package_data={'rohash.tests': ['data/*.json']},
      tests_require=['pytest'],
      entry_points=entry_points,
      )
