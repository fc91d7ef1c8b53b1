// Text similarity between reviewer profiles and submissions.
//
// TF-IDF cosine drives the assignment; symmetric KL over smoothed
// unigram models is the textual diversity measure.

use std::error::Error;

use revcover::textsim::{symmetric_kl, transform_f, TermCounts, TfIdfModel};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let docs = [
        "neural ranking models for passage retrieval",
        "query expansion with pseudo relevance feedback for retrieval",
        "learning to rank with gradient boosted trees",
        "graph databases and transaction processing",
    ];
    let model = TfIdfModel::fit(&docs);
    for b in 1..docs.len() {
        let s = model.cosine(0, b);
        println!("cos(doc0, doc{b}) = {s:.3}  f = {:.3}", transform_f(s)?);
    }
    assert!(model.cosine(0, 1) > model.cosine(0, 3));

    let a = TermCounts::from_text(docs[0]);
    let b = TermCounts::from_text(docs[1]);
    let c = TermCounts::from_text(docs[3]);
    let near = symmetric_kl(&a, &b);
    let far = symmetric_kl(&a, &c);
    println!("KL(doc0, doc1) = {near:.3}, KL(doc0, doc3) = {far:.3}");
    assert!(near >= 0.0 && far >= 0.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
