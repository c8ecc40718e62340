//! McCabe cyclomatic complexity over a definition's token stream.

use crate::lex::{self, TokenKind};

/// `1 +` the number of decision points after the parameter list:
/// `if`, `for`, `while`, `case`, `catch`, `?:` and each `&&`/`||`
/// (including the `and`/`or` alternative tokens).
pub fn cyclomatic_complexity(definition: &str) -> u32 {
    let toks = lex::code_tokens(definition);
    let start = body_start(definition, &toks);
    let mut count = 1;
    for t in &toks[start..] {
        let text = t.text(definition);
        let hit = match t.kind {
            TokenKind::Ident => matches!(
                text,
                "if" | "for" | "while" | "case" | "catch" | "and" | "or"
            ),
            TokenKind::Punct => matches!(text, "?" | "&&" | "||"),
            _ => false,
        };
        if hit {
            count += 1;
        }
    }
    count
}

/// Index of the first token after the parameter list's closing paren, so
/// `T&&` parameters are not mistaken for logical operators.
fn body_start(src: &str, toks: &[lex::Token]) -> usize {
    let mut i = 0;
    while i < toks.len() {
        let text = toks[i].text(src);
        if text == "operator" {
            // operator() / operator[] / operator&& : skip the operator symbol
            i += 1;
            if toks.get(i).map(|t| t.text(src)) == Some("(")
                && toks.get(i + 1).map(|t| t.text(src)) == Some(")")
            {
                i += 2;
            } else {
                i += 1;
            }
            continue;
        }
        if text == "{" {
            // no parameter list before the body (e.g. a lambda-less snippet)
            return i;
        }
        if text == "(" {
            let mut depth = 0usize;
            for (j, t) in toks.iter().enumerate().skip(i) {
                match t.text(src) {
                    "(" => depth += 1,
                    ")" => {
                        depth -= 1;
                        if depth == 0 {
                            return j + 1;
                        }
                    }
                    _ => {}
                }
            }
            return toks.len();
        }
        i += 1;
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn straight_line_is_one() {
        assert_eq!(
            cyclomatic_complexity("int f(int a) { int b = a + 1; return b; }"),
            1
        );
    }

    #[test]
    fn one_if_one_for_is_three() {
        let src = "int f(int n) {\n  int s = 0;\n  for (int i = 0; i < n; ++i) {\n    if (i % 2) s += i;\n  }\n  return s;\n}";
        assert_eq!(cyclomatic_complexity(src), 3);
    }

    #[test]
    fn else_if_chain_with_and_is_five() {
        // if, else if, else if -> 3 predicates; one && -> 1; base 1
        let src = "int g(int x, int y) {\n  if (x > 0 && y > 0) return 1;\n  else if (x < 0) return 2;\n  else if (y < 0) return 3;\n  else return 4;\n}";
        assert_eq!(cyclomatic_complexity(src), 5);
    }

    #[test]
    fn rvalue_reference_parameters_do_not_count() {
        assert_eq!(cyclomatic_complexity("void f(T&& a, U&& b) { g(a); }"), 1);
    }

    #[test]
    fn keywords_in_strings_and_comments_do_not_count() {
        let src = "void f() { // if while\n  puts(\"for ? &&\"); /* case */ }";
        assert_eq!(cyclomatic_complexity(src), 1);
    }

    #[test]
    fn switch_cases_ternary_and_catch() {
        let src = "int f(int k) { try { switch (k) { case 1: return 1; case 2: return k ? 2 : 3; default: return 0; } } catch (...) { return -1; } }";
        // case, case, ?, catch
        assert_eq!(cyclomatic_complexity(src), 5);
    }

    #[test]
    fn call_operator_definition() {
        assert_eq!(
            cyclomatic_complexity("bool operator()(int a) const { return a || b; }"),
            2
        );
    }

    proptest! {
        #[test]
        fn floor_is_one(body in "[a-z (){};&|?:]{0,64}") {
            let src = format!("void f() {{ {} }}", body);
            prop_assert!(cyclomatic_complexity(&src) >= 1);
        }

        #[test]
        fn each_added_if_counts_once(n in 0usize..12) {
            let body: String = (0..n).map(|i| format!("if (x == {i}) y++;\n")).collect();
            let src = format!("void f(int x) {{ int y = 0;\n{body} }}");
            prop_assert_eq!(cyclomatic_complexity(&src), 1 + n as u32);
        }
    }
}
