import pytest

from pseudodeform.deform import DeformationContext, build_a1, build_rho1
from pseudodeform.fixtures import pipeline_model, s3_model


@pytest.fixture(scope="session")
def p5_true():
    """alpha = 1 model plus its verified first-order data."""
    model = pipeline_model(p=5, nu=1)
    ctx = DeformationContext.from_model(model)
    a1, alpha = build_a1(ctx)
    fo = build_rho1(ctx, a1, alpha)
    return model, ctx, fo


@pytest.fixture(scope="session")
def p5_false():
    """alpha = 2 model plus its verified first-order data."""
    model = pipeline_model(p=5, nu=2)
    ctx = DeformationContext.from_model(model)
    a1, alpha = build_a1(ctx)
    fo = build_rho1(ctx, a1, alpha)
    return model, ctx, fo


@pytest.fixture(scope="session")
def p5_gate_fail_model():
    return pipeline_model(p=5, nu=2, frob_value=3)


@pytest.fixture(scope="session")
def s3_torsor():
    return s3_model(locals_mode="torsor")


@pytest.fixture(scope="session")
def s3_oracle():
    return s3_model(locals_mode="oracle")
