//! Train the rbf SVM on XOR, inspect the dual solution and reload the model.

use adverb_reason::pair::Pair;
use adverb_reason::svm::{train, SvmModel, SvmParams};

fn main() -> adverb_reason::Result<()> {
    let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let y = vec![true, true, false, false];
    let params = SvmParams {
        gamma: Some(1.0),
        ..SvmParams::default()
    };
    let (mut model, solution) = train(&x, &y, &params)?;
    model.classes = Some(Pair::new("slowly", "quickly")?);
    println!(
        "{} iterations, violation {:.2e}, dual objective {:.6}",
        solution.iterations,
        solution.violation,
        solution.dual_objective(&x, &y, model.gamma)
    );
    println!("alpha = {:?}, bias = {:.6}", solution.alpha, solution.bias);
    for p in &x {
        println!("f({p:?}) = {:+.4}", model.decision(p)?);
    }
    println!("f([0.5, 0.5]) = {:+.4}", model.decision(&[0.5, 0.5])?);

    let text = model.to_text();
    assert_eq!(SvmModel::parse(&text)?, model);
    print!("{text}");
    Ok(())
}
