//! Parsing of model responses under the output-format contract.

use serde::{Deserialize, Serialize};

/// Bodies of all closed fenced blocks, in order. A fence is a line starting
/// with three backticks; an info string after the opening fence is ignored.
/// An unclosed final fence yields nothing.
pub fn code_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.split_inclusive('\n') {
        let is_fence = line.trim_start().starts_with("```");
        match (&mut current, is_fence) {
            (None, true) => current = Some(String::new()),
            (Some(_), true) => blocks.extend(current.take()),
            (Some(buf), false) => buf.push_str(line),
            (None, false) => {}
        }
    }
    blocks
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentSummary {
    pub intent: String,
    pub ingredients: Vec<String>,
}

const INTENT: &str = "INTENT:";
const INGREDIENTS: &str = "INGREDIENTS:";

/// Reads the labeled `INTENT:` / `INGREDIENTS:` sections. Without an
/// `INTENT:` label the whole text is the intent and ingredients are empty.
/// `None` for a blank response.
pub fn parse_intent(text: &str) -> Option<IntentSummary> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let Some(i) = text.find(INTENT) else {
        return Some(IntentSummary {
            intent: text.to_string(),
            ingredients: Vec::new(),
        });
    };
    let after = &text[i + INTENT.len()..];
    let (intent, rest) = match after.find(INGREDIENTS) {
        Some(j) => (&after[..j], Some(&after[j + INGREDIENTS.len()..])),
        None => (after, None),
    };
    let mut ingredients: Vec<String> = Vec::new();
    for item in rest.unwrap_or("").split([',', '\n']) {
        let item = item
            .trim()
            .trim_start_matches(['-', '*', '•'])
            .trim()
            .trim_matches('`')
            .trim();
        if !item.is_empty() && !ingredients.iter().any(|x| x == item) {
            ingredients.push(item.to_string());
        }
    }
    Some(IntentSummary {
        intent: intent.trim().to_string(),
        ingredients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_block_and_info_string() {
        let t = "Here:\n```cpp\nint a;\n```\nand\n```\nint b;\n```\n";
        assert_eq!(code_blocks(t), ["int a;\n", "int b;\n"]);
        assert!(code_blocks("```cpp\nunterminated\n").is_empty());
        assert!(code_blocks("just prose").is_empty());
    }

    #[test]
    fn labeled_sections() {
        let s = parse_intent("INTENT: Converts a node.\nINGREDIENTS:\n- `Node`\n- Tag, Node\n")
            .unwrap();
        assert_eq!(s.intent, "Converts a node.");
        assert_eq!(s.ingredients, ["Node", "Tag"]);
    }

    #[test]
    fn prose_falls_back() {
        let s = parse_intent("  It adds numbers.  ").unwrap();
        assert_eq!(s.intent, "It adds numbers.");
        assert!(s.ingredients.is_empty());
        assert_eq!(parse_intent(" \n "), None);
    }

    proptest! {
        #[test]
        fn blocks_roundtrip(bodies in proptest::collection::vec("[a-z ;{}()]{0,20}", 0..4)) {
            let text: String = bodies.iter().map(|b| format!("prose\n```cpp\n{b}\n```\n")).collect();
            let got = code_blocks(&text);
            let want: Vec<String> = bodies.iter().map(|b| format!("{b}\n")).collect();
            prop_assert_eq!(got, want);
        }
    }
}
