from mrstab.common.errors import NotSmallCancellation

from abc import ABC, abstractmethod
from collections import Counter
from fractions import Fraction
from itertools import combinations
import re

IDENTITY_LABEL = '1'
POWER_RE = re.compile(r'\^(-?\d+)')


def inverse(word):
    return tuple(-l for l in reversed(word))


def free_reduce(word):
    stack = []
    for l in word:
        if stack and stack[-1] == -l:
            stack.pop()
        else:
            stack.append(l)
    return tuple(stack)


def cyclic_reduce(word):
    word = free_reduce(word)
    while len(word) > 1 and word[0] == -word[-1]:
        word = word[1:-1]
    return word


def cyclic_permutations(word):
    return [word[i:] + word[:i] for i in range(len(word))]


class Alphabet:
    """
    Maps generator symbols to letters. Generator i (0-based) is the letter i + 1 and its inverse -(i + 1).
    Symbols are single lowercase characters; the uppercase character denotes the inverse.
    Text syntax: letters, "x^n" powers, "[u,v]" commutators (u v u^-1 v^-1), parentheses with powers, "1" for
    the empty word.
    """
    def __init__(self, symbols):
        symbols = list(symbols)
        for s in symbols:
            if len(s) != 1 or not s.isalpha() or not s.islower():
                raise ValueError(f'Invalid generator symbol {s!r}: use single lowercase letters')
        if len(set(symbols)) != len(symbols):
            raise ValueError(f'Generator symbols must be distinct, got {symbols}')
        self.symbols = symbols
        self.to_letter = {s: i + 1 for i, s in enumerate(symbols)}
        self.to_letter.update({s.upper(): -(i + 1) for i, s in enumerate(symbols)})

    def __len__(self):
        return len(self.symbols)

    def format(self, word):
        if not word:
            return IDENTITY_LABEL
        return ''.join(self.symbols[l - 1] if l > 0 else self.symbols[-l - 1].upper() for l in word)

    def parse(self, text):
        text = text.replace(' ', '')
        if text in ('', IDENTITY_LABEL):
            return ()
        word, pos = self._parse_seq(text, 0)
        if pos != len(text):
            raise ValueError(f'Unexpected {text[pos]!r} at position {pos} in {text!r}')
        return word

    def _parse_seq(self, text, pos):
        word = ()
        while pos < len(text) and text[pos] not in ',])':
            atom, pos = self._parse_atom(text, pos)
            power = POWER_RE.match(text, pos)
            if power is not None:
                n = int(power.group(1))
                atom = atom * n if n >= 0 else inverse(atom) * (-n)
                pos = power.end()
            word += atom
        return word, pos

    def _parse_atom(self, text, pos):
        c = text[pos]
        if c == '[':
            u, pos = self._parse_seq(text, pos + 1)
            if pos >= len(text) or text[pos] != ',':
                raise ValueError(f'Commutator missing "," in {text!r}')
            v, pos = self._parse_seq(text, pos + 1)
            if pos >= len(text) or text[pos] != ']':
                raise ValueError(f'Commutator missing "]" in {text!r}')
            return u + v + inverse(u) + inverse(v), pos + 1
        if c == '(':
            u, pos = self._parse_seq(text, pos + 1)
            if pos >= len(text) or text[pos] != ')':
                raise ValueError(f'Unbalanced parenthesis in {text!r}')
            return u, pos + 1
        if c not in self.to_letter:
            raise ValueError(f'Unknown generator {c!r} in {text!r}; known: {self.symbols}')
        return (self.to_letter[c],), pos + 1


class WordOracle(ABC):
    """
    Normal forms for the elements of a group given by generators. Words are tuples of nonzero ints (see Alphabet).
    Two words have the same normal form iff they represent the same element, and normal forms are geodesic words.
    :param gens: the positive letters this oracle is responsible for
    """
    def __init__(self, gens):
        self.gens = sorted(gens)
        self.gen_set = set(self.gens)

    @property
    def letters(self):
        ''' Generators and inverses in the order a, A, b, B, ... '''
        return [l for g in self.gens for l in (g, -g)]

    @abstractmethod
    def normal_form(self, word):
        pass

    def is_identity(self, word):
        return len(self.normal_form(word)) == 0

    def multiply(self, u, v):
        return self.normal_form(tuple(u) + tuple(v))

    def equal(self, u, v):
        return self.is_identity(tuple(u) + inverse(v))

    def word_length(self, word):
        return len(self.normal_form(word))

    def lookup(self, word, max_length):
        ''' Normal form of the element when its word length is at most max_length, else None '''
        nf = self.normal_form(word)
        return nf if len(nf) <= max_length else None

    def coset_key(self, word, subset):
        ''' Canonical name of the left coset word * <subset>, for a normal-form word '''
        raise NotImplementedError(f'{type(self).__name__} has no coset enumeration. '
                                  f'try: free, free_abelian, free_product or direct_product')

    def subgroup_family(self, subset):
        ''' (family, rank) of the subgroup generated by a subset of the generators '''
        raise NotImplementedError(f'{type(self).__name__} cannot describe subgroups')


class FreeOracle(WordOracle):
    def normal_form(self, word):
        return free_reduce(word)

    def coset_key(self, word, subset):
        end = len(word)
        while end > 0 and abs(word[end - 1]) in subset:
            end -= 1
        return tuple(word[:end])

    def subgroup_family(self, subset):
        return 'free', len(subset & self.gen_set)


class FreeAbelianOracle(WordOracle):
    def exponents(self, word):
        counts = Counter()
        for l in word:
            counts[abs(l)] += 1 if l > 0 else -1
        return tuple(counts[g] for g in self.gens)

    def normal_form(self, word):
        nf = ()
        for g, e in zip(self.gens, self.exponents(word)):
            nf += (g,) * e if e >= 0 else (-g,) * (-e)
        return nf

    def coset_key(self, word, subset):
        return self.normal_form(tuple(l for l in word if abs(l) not in subset))

    def subgroup_family(self, subset):
        return 'free_abelian', len(subset & self.gen_set)


class FreeProductOracle(WordOracle):
    ''' Normal forms are alternating sequences of nontrivial factor normal forms (syllables) '''
    def __init__(self, left, right):
        super(FreeProductOracle, self).__init__(left.gens + right.gens)
        self.factors = [left, right]

    def factor_of(self, letter):
        return 0 if abs(letter) in self.factors[0].gen_set else 1

    def _runs(self, word):
        run, current = [], None
        for l in word:
            f = self.factor_of(l)
            if f != current and run:
                yield current, tuple(run)
                run = []
            current = f
            run.append(l)
        if run:
            yield current, tuple(run)

    def syllables(self, word):
        stack = []
        for f, run in self._runs(word):
            if stack and stack[-1][0] == f:
                merged = self.factors[f].normal_form(stack[-1][1] + run)
                if merged:
                    stack[-1] = (f, merged)
                else:
                    stack.pop()
            else:
                nf = self.factors[f].normal_form(run)
                if nf:
                    stack.append((f, nf))
        return stack

    def normal_form(self, word):
        return tuple(l for _, syllable in self.syllables(word) for l in syllable)

    def coset_key(self, word, subset):
        touched = [f for f, factor in enumerate(self.factors) if subset & factor.gen_set]
        if len(touched) > 1:
            raise NotImplementedError('Peripheral generators must lie in a single free factor')
        syllables = self.syllables(word)
        if touched and syllables and syllables[-1][0] == touched[0]:
            f, last = syllables.pop()
            last = self.factors[f].coset_key(last, subset & self.factors[f].gen_set)
            if last:
                syllables.append((f, last))
        return tuple(l for _, syllable in syllables for l in syllable)

    def subgroup_family(self, subset):
        touched = [factor for factor in self.factors if subset & factor.gen_set]
        if len(touched) != 1:
            raise NotImplementedError('Peripheral generators must lie in a single free factor')
        return touched[0].subgroup_family(subset)


class DirectProductOracle(WordOracle):
    def __init__(self, left, right):
        super(DirectProductOracle, self).__init__(left.gens + right.gens)
        self.factors = [left, right]

    def split(self, word):
        left = tuple(l for l in word if abs(l) in self.factors[0].gen_set)
        right = tuple(l for l in word if abs(l) not in self.factors[0].gen_set)
        return left, right

    def normal_form(self, word):
        left, right = self.split(word)
        return self.factors[0].normal_form(left) + self.factors[1].normal_form(right)

    def coset_key(self, word, subset):
        left, right = self.split(word)
        return self.factors[0].coset_key(left, subset) + self.factors[1].coset_key(right, subset)

    def subgroup_family(self, subset):
        families = [factor.subgroup_family(subset) for factor in self.factors if subset & factor.gen_set]
        if len(families) == 1:
            return families[0]
        if all(family == 'free_abelian' for family, _ in families):
            return 'free_abelian', sum(rank for _, rank in families)
        return 'direct_product', sum(rank for _, rank in families)


def small_cancellation_pieces(symmetrized):
    ''' Longest common prefix of each pair of distinct words in a symmetrized relator set '''
    for r1, r2 in combinations(symmetrized, 2):
        n = 0
        while n < min(len(r1), len(r2)) and r1[n] == r2[n]:
            n += 1
        yield r1, r2, n


class SmallCancellationOracle(WordOracle):
    """
    Groups given by a C'(lam) presentation, lam <= 1/6, solved with Dehn's algorithm: a nontrivial freely reduced
    word representing the identity contains more than half of some cyclic conjugate of a relator or its inverse.
    Equality is decided exactly. The normal form of an element is its shortlex least geodesic (letters ordered
    a, A, b, B, ...), read off spheres about the identity that are grown on demand; the spheres only depend on the
    presentation, so normal forms do not depend on the order of the calls.
    """
    def __init__(self, gens, relators, lam=Fraction(1, 6)):
        super(SmallCancellationOracle, self).__init__(gens)
        self.relators = [cyclic_reduce(r) for r in relators]
        if not self.relators or any(len(r) == 0 for r in self.relators):
            raise NotSmallCancellation('Presentation needs nonempty, non-trivial relators')
        symmetrized = set()
        for r in self.relators:
            symmetrized.update(cyclic_permutations(r))
            symmetrized.update(cyclic_permutations(inverse(r)))
        self.symmetrized = sorted(symmetrized, key=lambda w: (len(w), w))
        self.lam = Fraction(lam)
        for r1, r2, piece in small_cancellation_pieces(self.symmetrized):
            if piece >= self.lam * len(r1) or piece >= self.lam * len(r2):
                raise NotSmallCancellation(f'Piece of length {piece} shared by relators of lengths '
                                           f'{len(r1)} and {len(r2)} violates C\'({self.lam})')
        # more than half of a relator determines it, since pieces are shorter than a sixth
        self._halves = {}
        for r in self.symmetrized:
            self._halves.setdefault(len(r) // 2 + 1, {}).setdefault(r[:len(r) // 2 + 1], r)
        self._spheres = [[()]]
        self._buckets = [{self.abelianization(()): [()]}]

    def abelianization(self, word):
        counts = Counter()
        for l in word:
            counts[abs(l)] += 1 if l > 0 else -1
        return tuple(counts[g] for g in self.gens)

    def _relator_at(self, w, i):
        for size, prefixes in self._halves.items():
            r = prefixes.get(w[i:i + size])
            if r is not None:
                return r
        return None

    def dehn_reduce(self, word):
        ''' Replace more than half of a relator by the shorter rest until no such subword is left '''
        w = free_reduce(word)
        reduced = True
        while reduced and w:
            reduced = False
            for i in range(len(w)):
                r = self._relator_at(w, i)
                if r is None:
                    continue
                n = 0
                while n < len(r) and i + n < len(w) and w[i + n] == r[n]:
                    n += 1
                w = free_reduce(w[:i] + inverse(r[n:]) + w[i + n:])
                reduced = True
                break
        return w

    def is_identity(self, word):
        return len(self.dehn_reduce(word)) == 0

    def _find(self, word, max_length):
        ''' The sphere word equal to a Dehn-reduced word, searching spheres up to max_length '''
        ab = self.abelianization(word)
        for k in range(sum(abs(e) for e in ab), min(max_length, len(self._buckets) - 1) + 1):
            for rep in self._buckets[k].get(ab, []):
                if rep == word or self.is_identity(inverse(rep) + word):
                    return rep
        return None

    def _grow(self, radius):
        ''' Spheres up to radius; each sphere lists its elements' normal forms in shortlex order '''
        while len(self._spheres) <= radius:
            k = len(self._spheres) - 1
            self._spheres.append([])
            self._buckets.append({})
            for h in self._spheres[k]:
                for s in self.letters:
                    if h and s == -h[-1]:
                        continue
                    w = h + (s,)
                    if len(self.dehn_reduce(w)) <= k or self._find(w, k + 1) is not None:
                        continue
                    self._spheres[k + 1].append(w)
                    self._buckets[k + 1].setdefault(self.abelianization(w), []).append(w)

    def sphere(self, k):
        self._grow(k)
        return list(self._spheres[k])

    def normal_form(self, word):
        reduced = self.dehn_reduce(word)
        found = self._find(reduced, len(reduced))
        if found is None:
            self._grow(len(reduced))
            found = self._find(reduced, len(reduced))
        return found

    def lookup(self, word, max_length):
        reduced = self.dehn_reduce(word)
        self._grow(min(len(reduced), max_length))
        return self._find(reduced, max_length)


def dehn_normal_form(presentation, word):
    """
    Normal form of a word for a small-cancellation presentation (a SmallCancellationOracle): Dehn reduction,
    completed to the shortlex least geodesic. Words that are already shortlex least geodesics come back unchanged.
    """
    return presentation.normal_form(tuple(word))
