use lazylin::{evaluate, render_trace, rewrite, solve, with_trace, DenseMatrix};

fn main() {
    let a = DenseMatrix::random(6, 6, 1);
    let b = DenseMatrix::random(6, 1, 2);
    let e = solve(&a * a.expr().t(), &b);
    println!("{}", rewrite(&e).unwrap());
    let traced = with_trace(|c| evaluate(&e, c));
    print!("{}", render_trace(&traced.events));
}
