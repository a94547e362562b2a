'''
A posteriori well-clusterability checks for k-means.
'''
__version__ = '0.1.0'
