from mrstab.common.arguments import default_cache_dir
from mrstab.common.errors import CacheCorrupt
from mrstab.common.metric_graph import to_adjacency_text, from_adjacency_text

import hashlib
import json
import os
from pathlib import Path
import tempfile

HASH_PREFIX = '# sha256='


def cache_key(kind, params):
    ''' sha256 of the canonical json of (kind, params); params carry the construction version '''
    text = json.dumps({'kind': kind, 'params': params}, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode()).hexdigest()


class GraphCache:
    """
    Content-addressed store of MetricGraphs in adjacency text form.
    Each file starts with a line holding the sha256 of the rest of the file, so truncated or edited files are detected
    on read. Writes go to a temporary file in the same directory and are renamed into place, so several processes
    can share one cache root.
    """
    SUFFIX = '.adj'

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def path_of(self, kind, params):
        return self.root / f'{kind}_{cache_key(kind, params)[:24]}{self.SUFFIX}'

    def load(self, path):
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise CacheCorrupt(f'Could not read cache file {path}\nFull Error: {e}')
        header, _, body = text.partition('\n')
        if not header.startswith(HASH_PREFIX):
            raise CacheCorrupt(f'Cache file {path} has no hash header')
        if hashlib.sha256(body.encode()).hexdigest() != header[len(HASH_PREFIX):]:
            raise CacheCorrupt(f'Hash mismatch in cache file {path}')
        try:
            return from_adjacency_text(body)
        except ValueError as e:
            raise CacheCorrupt(f'Could not parse cache file {path}\nFull Error: {e}')

    def store(self, path, g):
        body = to_adjacency_text(g)
        text = f'{HASH_PREFIX}{hashlib.sha256(body.encode()).hexdigest()}\n{body}'
        self.root.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix='.tmp_', suffix=self.SUFFIX)
        try:
            with os.fdopen(fd, 'w') as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def fetch(self, kind, params, build):
        """
        Cached graph for (kind, params), building and storing it on a miss or a corrupt entry.
        :param build: zero-argument callable returning a MetricGraph
        """
        path = self.path_of(kind, params)
        if path.exists():
            try:
                g = self.load(path)
                self.hits += 1
                return g
            except CacheCorrupt as e:
                print(f'Could not load cached {kind} graph, creating it from scratch...\nFull Error: {e}')
        self.misses += 1
        g = build()
        self.store(path, g)
        return g

    def ls(self):
        ''' (file name, size in bytes) for every cached graph, sorted by name '''
        if not self.root.exists():
            return []
        return [(p.name, p.stat().st_size) for p in sorted(self.root.glob(f'*{self.SUFFIX}'))
                if not p.name.startswith('.tmp_')]

    def rm(self):
        ''' Remove every cached graph; returns how many files were deleted '''
        removed = 0
        if self.root.exists():
            for p in self.root.glob(f'*{self.SUFFIX}'):
                p.unlink()
                removed += 1
        return removed
