//! Suffix-stripping stemmer: the Porter algorithm (1980), as published.
//!
//! The rule set is fixed so frequency tables are reproducible bit-for-bit:
//!
//! - step 1a: `sses -> ss`, `ies -> i`, `s -> ` (unless the word ends `ss`)
//! - step 1b: `(m>0) eed -> ee`; `(*v*) ed -> `, `(*v*) ing -> `, then
//!   `at -> ate`, `bl -> ble`, `iz -> ize`, undouble a final double
//!   consonant (except `l`, `s`, `z`), or `(m=1 and *o) -> e`
//! - step 1c: `(*v*) y -> i`
//! - step 2 (m>0): `ational -> ate`, `tional -> tion`, `enci -> ence`,
//!   `anci -> ance`, `izer -> ize`, `abli -> able`, `alli -> al`,
//!   `entli -> ent`, `eli -> e`, `ousli -> ous`, `ization -> ize`,
//!   `ation -> ate`, `ator -> ate`, `alism -> al`, `iveness -> ive`,
//!   `fulness -> ful`, `ousness -> ous`, `aliti -> al`, `iviti -> ive`,
//!   `biliti -> ble`
//! - step 3 (m>0): `icate -> ic`, `ative -> `, `alize -> al`, `iciti -> ic`,
//!   `ical -> ic`, `ful -> `, `ness -> `
//! - step 4 (m>1): drop `al`, `ance`, `ence`, `er`, `ic`, `able`, `ible`,
//!   `ant`, `ement`, `ment`, `ent`, `(s|t)ion`, `ou`, `ism`, `ate`, `iti`,
//!   `ous`, `ive`, `ize`
//! - step 5a: `(m>1) e -> `; `(m=1 and not *o) e -> `
//! - step 5b: `(m>1 and *d and *L)` drop the final letter
//!
//! Words shorter than three letters, and tokens that are not pure ASCII
//! letters, are returned unchanged.

/// Stems one lowercase token.
pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut s = Porter {
        b: word.as_bytes().to_vec(),
        k: word.len() as isize - 1,
        j: 0,
    };
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    String::from_utf8(s.b[..=(s.k as usize)].to_vec()).expect("ascii stays ascii")
}

struct Porter {
    b: Vec<u8>,
    /// Index of the last letter of the current word.
    k: isize,
    /// Index of the last letter of the stem once a suffix matched.
    j: isize,
}

impl Porter {
    fn cons(&self, i: isize) -> bool {
        match self.b[i as usize] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// Measure of the stem b[0..=j]: m in [C](VC)^m[V].
    fn m(&self) -> isize {
        let mut n = 0;
        let mut i = 0;
        loop {
            if i > self.j {
                return n;
            }
            if !self.cons(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i > self.j {
                    return n;
                }
                if self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i > self.j {
                    return n;
                }
                if !self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.cons(i))
    }

    fn doublec(&self, j: isize) -> bool {
        j >= 1 && self.b[j as usize] == self.b[(j - 1) as usize] && self.cons(j)
    }

    /// consonant-vowel-consonant ending at i, where the final consonant is
    /// not w, x, or y.
    fn cvc(&self, i: isize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.b[i as usize], b'w' | b'x' | b'y')
    }

    fn ends(&mut self, suffix: &[u8]) -> bool {
        let len = suffix.len() as isize;
        if len > self.k + 1 {
            return false;
        }
        let start = (self.k + 1 - len) as usize;
        if &self.b[start..=(self.k as usize)] != suffix {
            return false;
        }
        self.j = self.k - len;
        true
    }

    fn set_to(&mut self, replacement: &[u8]) {
        self.b.truncate((self.j + 1) as usize);
        self.b.extend_from_slice(replacement);
        self.k = self.j + replacement.len() as isize;
    }

    fn replace_if_measure(&mut self, replacement: &[u8]) {
        if self.m() > 0 {
            self.set_to(replacement);
        }
    }

    fn step1ab(&mut self) {
        if self.b[self.k as usize] == b's' {
            if self.ends(b"sses") {
                self.k -= 2;
            } else if self.ends(b"ies") {
                self.set_to(b"i");
            } else if self.b[(self.k - 1) as usize] != b's' {
                self.k -= 1;
            }
        }
        if self.ends(b"eed") {
            if self.m() > 0 {
                self.k -= 1;
            }
        } else if (self.ends(b"ed") || self.ends(b"ing")) && self.vowel_in_stem() {
            self.k = self.j;
            if self.ends(b"at") {
                self.set_to(b"ate");
            } else if self.ends(b"bl") {
                self.set_to(b"ble");
            } else if self.ends(b"iz") {
                self.set_to(b"ize");
            } else if self.doublec(self.k) {
                self.k -= 1;
                let ch = self.b[self.k as usize];
                if ch == b'l' || ch == b's' || ch == b'z' {
                    self.k += 1;
                }
            } else if self.m() == 1 && self.cvc(self.k) {
                self.set_to(b"e");
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends(b"y") && self.vowel_in_stem() {
            self.b[self.k as usize] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ational", b"ate"),
            (b"tional", b"tion"),
            (b"enci", b"ence"),
            (b"anci", b"ance"),
            (b"izer", b"ize"),
            (b"abli", b"able"),
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
        ];
        for (suffix, replacement) in RULES {
            if self.ends(suffix) {
                self.replace_if_measure(replacement);
                return;
            }
        }
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
        for (suffix, replacement) in RULES {
            if self.ends(suffix) {
                self.replace_if_measure(replacement);
                return;
            }
        }
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&[u8]] = &[
            b"al", b"ance", b"ence", b"er", b"ic", b"able", b"ible", b"ant", b"ement", b"ment",
            b"ent",
        ];
        for suffix in SUFFIXES {
            if self.ends(suffix) {
                if self.m() > 1 {
                    self.k = self.j;
                }
                return;
            }
        }
        if self.ends(b"ion") {
            if self.j >= 0 && matches!(self.b[self.j as usize], b's' | b't') && self.m() > 1 {
                self.k = self.j;
            }
            return;
        }
        const TAIL: &[&[u8]] = &[b"ou", b"ism", b"ate", b"iti", b"ous", b"ive", b"ize"];
        for suffix in TAIL {
            if self.ends(suffix) {
                if self.m() > 1 {
                    self.k = self.j;
                }
                return;
            }
        }
    }

    fn step5(&mut self) {
        self.j = self.k;
        if self.b[self.k as usize] == b'e' {
            let a = self.m();
            if a > 1 || (a == 1 && !self.cvc(self.k - 1)) {
                self.k -= 1;
            }
        }
        if self.b[self.k as usize] == b'l' && self.doublec(self.k) && self.m() > 1 {
            self.k -= 1;
        }
    }
}
