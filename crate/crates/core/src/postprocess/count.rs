//! Test-case counting: one per framework test macro, else one per
//! file-defined function called from `main`.

use crate::lex::{self, TokenKind};
use crate::repo::{SyntaxBackend, TreeSitterBackend};

pub const TEST_MACROS: [&str; 5] = ["TEST", "TEST_F", "TEST_P", "TYPED_TEST", "TYPED_TEST_P"];

pub fn count_test_cases(src: &str) -> usize {
    let toks = lex::code_tokens(src);
    let macros = toks
        .windows(2)
        .filter(|w| {
            w[0].kind == TokenKind::Ident
                && TEST_MACROS.contains(&w[0].text(src))
                && w[1].text(src) == "("
        })
        .count();
    if macros > 0 {
        return macros;
    }
    let Ok(outline) = TreeSitterBackend::new().outline(src) else {
        return 0;
    };
    let Some(main) = outline
        .functions
        .iter()
        .find(|f| f.name == "main" && f.class_name.is_none())
    else {
        return 0;
    };
    let body = main.body_span.slice(src);
    let body_toks = lex::code_tokens(body);
    let mut called: Vec<&str> = outline
        .functions
        .iter()
        .filter(|f| f.name != "main" && f.class_name.is_none())
        .map(|f| f.name.as_str())
        .filter(|name| {
            body_toks
                .windows(2)
                .any(|w| w[0].text(body) == *name && w[1].text(body) == "(")
        })
        .collect();
    called.dedup();
    called.len().max(1)
}
