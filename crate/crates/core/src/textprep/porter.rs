//! Porter's suffix-stripping stemmer for English.
//!
//! This is the classic measure-based algorithm as shipped in the widely used
//! reference implementation, including its documented departures from the
//! original 1980 description: `(m>0) BLI -> BLE` replaces `(m>0) ABLI -> ABLE`,
//! the rule `(m>0) LOGI -> LOG` is added, and words of one or two letters are
//! left untouched.

/// Stem a single word.
///
/// Input is lowercased first; the algorithm itself only applies to words made
/// entirely of ASCII letters and longer than two characters — anything else is
/// returned (lowercased) unchanged.
pub fn stem(word: &str) -> String {
    let lower = word.to_ascii_lowercase();
    if lower.len() <= 2 || !lower.bytes().all(|b| b.is_ascii_lowercase()) {
        return lower;
    }
    let mut s = Stemmer {
        b: lower.into_bytes(),
    };
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5a();
    s.step5b();
    String::from_utf8(s.b).expect("stemmer only rearranges ASCII bytes")
}

struct Stemmer {
    b: Vec<u8>,
}

impl Stemmer {
    /// Is `b[i]` a consonant? `y` counts as a consonant at the start of the
    /// word or after a vowel, and as a vowel after a consonant.
    fn is_cons(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_cons(i - 1),
            _ => true,
        }
    }

    /// The measure of `b[..len]`: the number of vowel-consonant sequences in
    /// its `[C](VC)^m[V]` decomposition.
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < len && self.is_cons(i) {
            i += 1;
        }
        loop {
            while i < len && !self.is_cons(i) {
                i += 1;
            }
            if i == len {
                return m;
            }
            while i < len && self.is_cons(i) {
                i += 1;
            }
            m += 1;
            if i == len {
                return m;
            }
        }
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_cons(i))
    }

    /// Does the word end in a doubled consonant?
    fn ends_double_cons(&self) -> bool {
        let n = self.b.len();
        n >= 2 && self.b[n - 1] == self.b[n - 2] && self.is_cons(n - 1)
    }

    /// consonant-vowel-consonant ending at `i`, where the final consonant is
    /// not `w`, `x` or `y` (the `*o` condition).
    fn cvc(&self, i: usize) -> bool {
        if i < 2 || !self.is_cons(i) || self.is_cons(i - 1) || !self.is_cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], b'w' | b'x' | b'y')
    }

    fn ends(&self, suffix: &[u8]) -> bool {
        self.b.ends_with(suffix)
    }

    fn chop(&mut self, n: usize) {
        let keep = self.b.len() - n;
        self.b.truncate(keep);
    }

    /// Apply the first rule whose suffix matches; the replacement only happens
    /// when the remaining stem has positive measure, but a failed condition
    /// still ends the step (no shorter suffix is tried).
    fn apply_rules(&mut self, rules: &[(&[u8], &[u8])]) {
        for &(suffix, replacement) in rules {
            if self.ends(suffix) {
                let stem_len = self.b.len() - suffix.len();
                if self.measure(stem_len) > 0 {
                    self.b.truncate(stem_len);
                    self.b.extend_from_slice(replacement);
                }
                return;
            }
        }
    }

    /// Plurals: SSES -> SS, IES -> I, and a trailing S after anything but S.
    fn step1a(&mut self) {
        if self.b.last() != Some(&b's') {
            return;
        }
        if self.ends(b"sses") || self.ends(b"ies") {
            self.chop(2);
        } else if !self.ends(b"ss") {
            self.chop(1);
        }
    }

    /// Past tenses and gerunds: EED, ED, ING, with restorative fix-ups.
    fn step1b(&mut self) {
        if self.ends(b"eed") {
            if self.measure(self.b.len() - 3) > 0 {
                self.chop(1);
            }
        } else if self.ends(b"ed") {
            if self.has_vowel(self.b.len() - 2) {
                self.chop(2);
                self.fixup_after_1b();
            }
        } else if self.ends(b"ing") && self.has_vowel(self.b.len() - 3) {
            self.chop(3);
            self.fixup_after_1b();
        }
    }

    /// After removing ED or ING: restore an `e` for AT/BL/IZ stems, undouble a
    /// final double consonant (except l, s, z), or restore an `e` after a
    /// short consonant-vowel-consonant stem.
    fn fixup_after_1b(&mut self) {
        if self.ends(b"at") || self.ends(b"bl") || self.ends(b"iz") {
            self.b.push(b'e');
        } else if self.ends_double_cons() {
            if !matches!(self.b[self.b.len() - 1], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else if self.measure(self.b.len()) == 1 && self.cvc(self.b.len() - 1) {
            self.b.push(b'e');
        }
    }

    /// Turn a final `y` into `i` when the stem contains a vowel.
    fn step1c(&mut self) {
        if self.b.last() == Some(&b'y') && self.has_vowel(self.b.len() - 1) {
            let n = self.b.len();
            self.b[n - 1] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ational", b"ate"),
            (b"tional", b"tion"),
            (b"enci", b"ence"),
            (b"anci", b"ance"),
            (b"izer", b"ize"),
            (b"bli", b"ble"),
            (b"alli", b"al"),
            (b"entli", b"ent"),
            (b"eli", b"e"),
            (b"ousli", b"ous"),
            (b"ization", b"ize"),
            (b"ation", b"ate"),
            (b"ator", b"ate"),
            (b"alism", b"al"),
            (b"iveness", b"ive"),
            (b"fulness", b"ful"),
            (b"ousness", b"ous"),
            (b"aliti", b"al"),
            (b"iviti", b"ive"),
            (b"biliti", b"ble"),
            (b"logi", b"log"),
        ];
        self.apply_rules(RULES);
    }

    fn step3(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"icate", b"ic"),
            (b"ative", b""),
            (b"alize", b"al"),
            (b"iciti", b"ic"),
            (b"ical", b"ic"),
            (b"ful", b""),
            (b"ness", b""),
        ];
        self.apply_rules(RULES);
    }

    /// Strip residual suffixes outright when the measure exceeds one. ION is
    /// only removed after S or T; a failed S/T guard lets the scan continue,
    /// mirroring the reference implementation.
    fn step4(&mut self) {
        const SUFFIXES: &[&[u8]] = &[
            b"al", b"ance", b"ence", b"er", b"ic", b"able", b"ible", b"ant", b"ement", b"ment",
            b"ent", b"ion", b"ou", b"ism", b"ate", b"iti", b"ous", b"ive", b"ize",
        ];
        for &suffix in SUFFIXES {
            if !self.ends(suffix) {
                continue;
            }
            let stem_len = self.b.len() - suffix.len();
            if suffix == b"ion" && !(stem_len > 0 && matches!(self.b[stem_len - 1], b's' | b't')) {
                continue;
            }
            if self.measure(stem_len) > 1 {
                self.b.truncate(stem_len);
            }
            return;
        }
    }

    /// Drop a final `e` when the measure allows it.
    fn step5a(&mut self) {
        if self.b.last() != Some(&b'e') {
            return;
        }
        let m = self.measure(self.b.len());
        if m > 1 || (m == 1 && !self.cvc(self.b.len() - 2)) {
            self.b.pop();
        }
    }

    /// Reduce a final double `l` when the measure exceeds one.
    fn step5b(&mut self) {
        if self.b.last() == Some(&b'l')
            && self.ends_double_cons()
            && self.measure(self.b.len()) > 1
        {
            self.b.pop();
        }
    }
}
