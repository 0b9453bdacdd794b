fn main() {
    let t0 = std::time::Instant::now();
    let report = schottky::schottky_trop::verify_azygetic_lemma(None, None);
    println!("total subgroups: {}", report.subgroups_total);
    println!("processed:       {}", report.subgroups_processed);
    println!("with even trips: {}", report.subgroups_with_even_triples);
    println!("triples checked: {}", report.triples_checked);
    println!("ce1: {}  ce2: {}", report.property1_counterexamples.len(), report.property2_counterexamples.len());
    println!("complete: {}", report.complete());
    println!("elapsed: {:?}", t0.elapsed());
}
