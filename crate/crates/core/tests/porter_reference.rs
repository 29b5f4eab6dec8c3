//! Checks the stemmer against the published reference vocabulary: every one
//! of the 23,531 word/stem pairs must match exactly.

use repclass_core::textprep::stem;

#[test]
fn matches_reference_vocabulary_exactly() {
    let voc = include_str!("data/porter/voc.txt");
    let expected = include_str!("data/porter/output.txt");
    let mut total = 0usize;
    let mut mismatches = Vec::new();
    for (word, want) in voc.lines().zip(expected.lines()) {
        total += 1;
        let got = stem(word);
        if got != want {
            mismatches.push(format!("{word} -> {got} (want {want})"));
        }
    }
    assert_eq!(total, 23_531, "reference vocabulary should be complete");
    assert!(
        mismatches.is_empty(),
        "{} of {} stems differ, first few: {:?}",
        mismatches.len(),
        total,
        &mismatches[..mismatches.len().min(10)]
    );
}
