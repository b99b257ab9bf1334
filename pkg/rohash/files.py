# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
Output file name templates for corpora and experiments.

Templates are filled with ``str.format`` keyword substitution, e.g.
``files['corpus_image'].format(image_id='img0007')``.
"""
files = dict(corpus_image =  '{image_id}.png',
             query_image  =  '{query_id}.jpg',
             manifest     =  'manifest.csv',
             item_specs   =  'specs.json',
             )

# Real query of reference ``origin_id`` and fake query of one manipulation
query_ids = dict(real = '{origin_id}__real',
                 fake = '{origin_id}__{manipulation}',
                 )
