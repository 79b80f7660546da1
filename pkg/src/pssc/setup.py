from setuptools import setup

setup(
    name='pssc',
    version='1.0',
    description='Pseudo-supervised deep subspace clustering with a '
                'self-expressive auto-encoder.',
    packages=['pssc'],
    install_requires=['numpy', 'scipy', 'scikit-learn', 'pandas', 'pydantic>=2'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['pssc=pssc.cli:main']},
)
