//! English number words: parsing runs of words into values and spelling values out.

const UNITS: [&str; 20] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];

const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Word {
    Zero,
    Unit(u64),
    Teen(u64),
    Ten(u64),
    Hundred,
    Thousand,
}

fn classify(token: &str) -> Option<Word> {
    if let Some(v) = UNITS.iter().position(|&w| w == token) {
        let v = v as u64;
        return Some(match v {
            0 => Word::Zero,
            1..=9 => Word::Unit(v),
            _ => Word::Teen(v),
        });
    }
    if let Some(v) = TENS.iter().position(|&w| !w.is_empty() && w == token) {
        return Some(Word::Ten(v as u64 * 10));
    }
    match token {
        "hundred" => Some(Word::Hundred),
        "thousand" => Some(Word::Thousand),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Last {
    Zero,
    Unit,
    Teen,
    Ten,
    Hundred,
    Thousand,
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    thousands: u64,
    group: u64,
    last: Last,
}

impl Partial {
    fn start(word: Word) -> Self {
        let (group, thousands, last) = match word {
            Word::Zero => (0, 0, Last::Zero),
            Word::Unit(v) => (v, 0, Last::Unit),
            Word::Teen(v) => (v, 0, Last::Teen),
            Word::Ten(v) => (v, 0, Last::Ten),
            Word::Hundred => (100, 0, Last::Hundred),
            Word::Thousand => (0, 1000, Last::Thousand),
        };
        Self {
            thousands,
            group,
            last,
        }
    }

    /// Extends the number with `word`, or returns `None` if it cannot continue.
    fn extend(self, word: Word) -> Option<Self> {
        let Partial {
            thousands,
            group,
            last,
        } = self;
        let next = match (last, word) {
            (Last::Zero, _) | (_, Word::Zero) => return None,
            (Last::Ten, Word::Unit(v)) => (thousands, group + v, Last::Unit),
            (Last::Hundred, Word::Unit(v)) => (thousands, group + v, Last::Unit),
            (Last::Hundred, Word::Teen(v)) => (thousands, group + v, Last::Teen),
            (Last::Hundred, Word::Ten(v)) => (thousands, group + v, Last::Ten),
            (Last::Thousand, Word::Unit(v)) => (thousands, v, Last::Unit),
            (Last::Thousand, Word::Teen(v)) => (thousands, v, Last::Teen),
            (Last::Thousand, Word::Ten(v)) => (thousands, v, Last::Ten),
            (Last::Unit, Word::Hundred) if group < 10 => (thousands, group * 100, Last::Hundred),
            (Last::Unit | Last::Teen | Last::Ten | Last::Hundred, Word::Thousand)
                if thousands == 0 && group > 0 =>
            {
                (group * 1000, 0, Last::Thousand)
            }
            _ => return None,
        };
        Some(Partial {
            thousands: next.0,
            group: next.1,
            last: next.2,
        })
    }

    fn value(self) -> u64 {
        self.thousands + self.group
    }
}

/// Replaces every maximal run of number words in `tokens` by its digit string.
///
/// Handles values up to 999,999. A run that cannot continue is closed and a new
/// one started, so "one two" becomes "1 2".
pub fn words_to_digits<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Option<Partial> = None;
    for token in tokens {
        match classify(token) {
            Some(word) => {
                current = match current.map(|p| p.extend(word)) {
                    Some(Some(extended)) => Some(extended),
                    Some(None) => {
                        out.push(current.map(Partial::value).unwrap_or(0).to_string());
                        Some(Partial::start(word))
                    }
                    None => Some(Partial::start(word)),
                };
            }
            None => {
                if let Some(p) = current.take() {
                    out.push(p.value().to_string());
                }
                out.push(token.to_owned());
            }
        }
    }
    if let Some(p) = current {
        out.push(p.value().to_string());
    }
    out
}

/// Spells `n` as English words. Values above 999,999 are read digit by digit.
pub fn spell(n: u64) -> Vec<&'static str> {
    let mut out = Vec::new();
    if n > 999_999 {
        let mut digits: Vec<u64> = Vec::new();
        let mut m = n;
        while m > 0 {
            digits.push(m % 10);
            m /= 10;
        }
        out.extend(digits.iter().rev().map(|&d| UNITS[d as usize]));
        return out;
    }
    if n == 0 {
        out.push(UNITS[0]);
        return out;
    }
    let thousands = n / 1000;
    let rest = n % 1000;
    if thousands > 0 {
        spell_group(thousands, &mut out);
        out.push("thousand");
    }
    if rest > 0 {
        spell_group(rest, &mut out);
    }
    out
}

/// Spells a digit string; anything unparseable is read digit by digit.
pub fn spell_digits(digits: &str) -> Vec<&'static str> {
    match digits.parse::<u64>() {
        Ok(n) if digits.len() <= 6 && (digits.len() == 1 || !digits.starts_with('0')) => spell(n),
        _ => digits
            .chars()
            .filter_map(|c| c.to_digit(10))
            .map(|d| UNITS[d as usize])
            .collect(),
    }
}

fn spell_group(n: u64, out: &mut Vec<&'static str>) {
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        out.push(UNITS[hundreds as usize]);
        out.push("hundred");
    }
    match rest {
        0 => {}
        1..=19 => out.push(UNITS[rest as usize]),
        _ => {
            out.push(TENS[(rest / 10) as usize]);
            if !rest.is_multiple_of(10) {
                out.push(UNITS[(rest % 10) as usize]);
            }
        }
    }
}
