//! Random JSON-ish strings for differential grammar tests: valid documents,
//! mutated documents and short noise.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::value::RawValue;

/// Strict reference: serde_json accepts the text and it is an object.
/// `RawValue` checks escape syntax but not surrogate pairing, like the grammar.
pub fn oracle(text: &str) -> bool {
    serde_json::from_str::<Box<RawValue>>(text).is_ok() && text.trim_start_matches([' ', '\t', '\n', '\r']).starts_with('{')
}

const WS: [&str; 6] = ["", "", " ", "\n", "\t ", "\r\n"];

fn ws(rng: &mut ChaCha8Rng) -> &'static str {
    WS.choose(rng).unwrap()
}

fn string(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 14] = [
        "a", "plan", "rb1", " ", "é", "\\n", "\\\"", "\\\\", "\\u00e9", "\\ud83d\\ude00", "\\/", "猫", "\\t", "{}",
    ];
    let n = rng.random_range(0..5);
    let body: String = (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect();
    format!("\"{body}\"")
}

fn number(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    if rng.random_bool(0.3) {
        s.push('-');
    }
    if rng.random_bool(0.3) {
        s.push('0');
    } else {
        s.push_str(&rng.random_range(1..100_000u32).to_string());
    }
    if rng.random_bool(0.3) {
        s.push_str(&format!(".{}", rng.random_range(0..1000)));
    }
    if rng.random_bool(0.2) {
        s.push_str(["e", "E", "e+", "e-"].choose(rng).unwrap());
        s.push_str(&rng.random_range(0..40).to_string());
    }
    s
}

fn value(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let pick = if depth >= 4 { rng.random_range(0..4) } else { rng.random_range(0..6) };
    match pick {
        0 => string(rng),
        1 => number(rng),
        2 => ["true", "false", "null"].choose(rng).unwrap().to_string(),
        3 => string(rng),
        4 => {
            let n = rng.random_range(0..4);
            let items: Vec<String> = (0..n).map(|_| format!("{}{}", value(rng, depth + 1), ws(rng))).collect();
            format!("[{}{}]", ws(rng), items.join(&format!(",{}", ws(rng))))
        }
        _ => object(rng, depth + 1),
    }
}

fn object(rng: &mut ChaCha8Rng, depth: usize) -> String {
    let n = rng.random_range(0..4);
    let members: Vec<String> = (0..n)
        .map(|_| format!("{}{}:{}{}{}", string(rng), ws(rng), ws(rng), value(rng, depth), ws(rng)))
        .collect();
    format!("{{{}{}}}", ws(rng), members.join(&format!(",{}", ws(rng))))
}

const NOISE: [char; 24] = [
    '{', '}', '[', ']', '"', ':', ',', '\\', '0', '1', '-', '.', 'e', 'u', 't', 'n', ' ', '\n', '\u{1}', '\u{7f}', 'x', '+', 'é', 'f',
];

/// Applies 1-3 random character edits.
fn mutate(rng: &mut ChaCha8Rng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.random_range(1..=3) {
        let pos = rng.random_range(0..=chars.len());
        match rng.random_range(0..3) {
            0 if !chars.is_empty() => {
                chars.remove(pos.min(chars.len() - 1));
            }
            1 if pos < chars.len() => chars[pos] = *NOISE.choose(rng).unwrap(),
            _ => chars.insert(pos, *NOISE.choose(rng).unwrap()),
        }
    }
    chars.into_iter().collect()
}

pub fn case(rng: &mut ChaCha8Rng) -> String {
    let base = format!("{}{}", ws(rng), if rng.random_bool(0.85) { object(rng, 0) } else { value(rng, 0) });
    match rng.random_range(0..10) {
        0..=3 => base,
        4..=8 => mutate(rng, &base),
        _ => {
            let n = rng.random_range(0..12);
            (0..n).map(|_| *NOISE.choose(rng).unwrap()).collect()
        }
    }
}
