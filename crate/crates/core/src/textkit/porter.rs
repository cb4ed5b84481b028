//! Porter's suffix-stripping stemmer.
//!
//! Follows the reference implementation distributed by Martin Porter, which
//! maps `-bli` to `-ble` and adds a `-logi` rule in step 2.

struct Stemmer {
    b: Vec<u8>,
    /// End of the stem under consideration once a suffix matched.
    j: usize,
}

impl Stemmer {
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_consonant(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in `b[..self.j]`.
    fn measure(&self) -> usize {
        let end = self.j;
        let mut i = 0;
        while i < end && self.is_consonant(i) {
            i += 1;
        }
        let mut m = 0;
        loop {
            while i < end && !self.is_consonant(i) {
                i += 1;
            }
            if i >= end {
                return m;
            }
            while i < end && self.is_consonant(i) {
                i += 1;
            }
            m += 1;
            if i >= end {
                return m;
            }
        }
    }

    fn stem_has_vowel(&self) -> bool {
        (0..self.j).any(|i| !self.is_consonant(i))
    }

    fn double_consonant_at(&self, end: usize) -> bool {
        end >= 2 && self.b[end - 1] == self.b[end - 2] && self.is_consonant(end - 1)
    }

    /// consonant-vowel-consonant ending at `end`, last consonant not w, x or y.
    fn cvc_at(&self, end: usize) -> bool {
        if end < 3 {
            return false;
        }
        let (i, j, k) = (end - 3, end - 2, end - 1);
        self.is_consonant(i)
            && !self.is_consonant(j)
            && self.is_consonant(k)
            && !matches!(self.b[k], b'w' | b'x' | b'y')
    }

    fn ends_with(&mut self, suffix: &str) -> bool {
        let s = suffix.as_bytes();
        if s.len() > self.b.len() || !self.b.ends_with(s) {
            return false;
        }
        self.j = self.b.len() - s.len();
        true
    }

    fn set_to(&mut self, replacement: &str) {
        self.b.truncate(self.j);
        self.b.extend_from_slice(replacement.as_bytes());
    }

    /// Replaces the matched suffix when the stem measure is positive.
    fn replace_if_measured(&mut self, replacement: &str) {
        if self.measure() > 0 {
            self.set_to(replacement);
        }
    }

    fn step1a(&mut self) {
        if self.ends_with("sses") {
            self.set_to("ss");
        } else if self.ends_with("ies") {
            self.set_to("i");
        } else if self.ends_with("ss") {
        } else if self.ends_with("s") {
            self.set_to("");
        }
    }

    fn step1b(&mut self) {
        if self.ends_with("eed") {
            if self.measure() > 0 {
                self.set_to("ee");
            }
            return;
        }
        let stripped = (self.ends_with("ed") || self.ends_with("ing")) && self.stem_has_vowel();
        if !stripped {
            return;
        }
        self.set_to("");
        if self.ends_with("at") {
            self.set_to("ate");
        } else if self.ends_with("bl") {
            self.set_to("ble");
        } else if self.ends_with("iz") {
            self.set_to("ize");
        } else if self.double_consonant_at(self.b.len()) {
            if !matches!(self.b[self.b.len() - 1], b'l' | b's' | b'z') {
                self.b.pop();
            }
        } else {
            self.j = self.b.len();
            if self.measure() == 1 && self.cvc_at(self.b.len()) {
                self.b.push(b'e');
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends_with("y") && self.stem_has_vowel() {
            let last = self.b.len() - 1;
            self.b[last] = b'i';
        }
    }

    fn apply_first(&mut self, rules: &[(&str, &str)]) {
        for (suffix, replacement) in rules {
            if self.ends_with(suffix) {
                self.replace_if_measured(replacement);
                return;
            }
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("bli", "ble"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
            ("logi", "log"),
        ];
        self.apply_first(RULES);
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_first(RULES);
    }

    fn step4(&mut self) {
        const SUFFIXES: &[&str] = &[
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
            "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        ];
        // Longest matching suffix decides; a failed condition does not fall back to a shorter one.
        let Some(suffix) = SUFFIXES
            .iter()
            .filter(|s| self.b.ends_with(s.as_bytes()) && s.len() < self.b.len())
            .max_by_key(|s| s.len())
        else {
            return;
        };
        self.j = self.b.len() - suffix.len();
        if *suffix == "ion" && !matches!(self.b[self.j - 1], b's' | b't') {
            return;
        }
        if self.measure() > 1 {
            self.b.truncate(self.j);
        }
    }

    fn step5(&mut self) {
        self.j = self.b.len();
        if self.b.last() == Some(&b'e') {
            self.j = self.b.len() - 1;
            let m = self.measure();
            if m > 1 || (m == 1 && !self.cvc_at(self.j)) {
                self.b.pop();
            }
        }
        self.j = self.b.len();
        if self.b.last() == Some(&b'l')
            && self.double_consonant_at(self.b.len())
            && self.measure() > 1
        {
            self.b.pop();
        }
    }
}

/// Stems one lowercase word. Words of two letters or fewer, and words with
/// non-ASCII characters, are returned unchanged.
pub fn porter_stem(word: &str) -> String {
    if word.len() <= 2 || !word.is_ascii() {
        return word.to_string();
    }
    let mut s = Stemmer {
        b: word.as_bytes().to_vec(),
        j: 0,
    };
    s.step1a();
    s.step1b();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    String::from_utf8(s.b).expect("ASCII input stays ASCII")
}
